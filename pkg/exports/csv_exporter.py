import logging
from pathlib import Path
from typing import Union

import pandas as pd

logger = logging.getLogger(__name__)

SIGNIFICANT_DIGITS = 12


def csv_path(out: Union[str, Path]) -> Path:
    """'<out>.csv', unless out already names a .csv file."""
    out = Path(out)
    return out if out.suffix.lower() == ".csv" else out.with_name(out.name + ".csv")


def table_to_csv_text(df: pd.DataFrame, digits: int = SIGNIFICANT_DIGITS) -> str:
    """CSV text with a fixed float format, '.' radix, 'nan' for missing values and '\\n' line endings."""
    return df.to_csv(index=False, float_format=f"%.{digits}g", na_rep="nan", lineterminator="\n")


def export_table_csv(df: pd.DataFrame, path: Union[str, Path], digits: int = SIGNIFICANT_DIGITS) -> Path:
    if df.empty:
        raise ValueError("Refusing to write an empty table")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(table_to_csv_text(df, digits))
    logger.info(f"Wrote {len(df)} rows to {path}")
    return path
