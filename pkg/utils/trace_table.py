import logging
from typing import Dict, List, Sequence

import numpy as np
import pandas as pd

from utils.fidelity import FidelityTrace, trace_summary

TIMESERIES_COLUMNS = ['t_over_Tpi', 't_absolute', 'method', 'f_state', 'F_op']
SWEEP_VALUE_COLUMN = 'sweep_value'


class TraceTableBuilder:
    """
    Turns fidelity traces and sweep results into tidy pandas tables ready for export.
    """

    def __init__(self, clip_tolerance: float = 1e-12):
        self.clip_tolerance = clip_tolerance
        self.logger = logging.getLogger(__name__)

    def timeseries_table(self, traces: Sequence[FidelityTrace]) -> pd.DataFrame:
        if not traces:
            raise ValueError("No traces to tabulate.")

        frames = []
        for trace in traces:
            frames.append(pd.DataFrame({
                't_over_Tpi': trace.t_over_pi,
                't_absolute': trace.times,
                'method': trace.method,
                'f_state': trace.f_state,
                'F_op': trace.F_op,
            }))
            if trace.failed:
                self.logger.warning(f"Trace '{trace.method}' is all nan: {trace.error}")
        table = pd.concat(frames, ignore_index=True)[TIMESERIES_COLUMNS]
        table = self._clip_fidelities(table, ['f_state', 'F_op'])
        self.logger.info(f"Timeseries table built with shape: {table.shape}")
        return table

    def sweep_table(self, rows: List[Dict[str, object]], metric_column: str) -> pd.DataFrame:
        if not rows:
            raise ValueError("No sweep rows to tabulate.")
        table = pd.DataFrame(rows, columns=[SWEEP_VALUE_COLUMN, 'method', metric_column])
        table[metric_column] = table[metric_column].astype(float)
        table = self._clip_fidelities(table, [metric_column])
        missing = int(table[metric_column].isna().sum())
        if missing > 0:
            self.logger.warning(f"{missing} sweep row(s) carry nan")
        return table

    def summary_table(self, traces: Sequence[FidelityTrace]) -> pd.DataFrame:
        if not traces:
            return pd.DataFrame()
        summary_data = []
        for trace in traces:
            metrics = trace_summary(trace)
            metrics['method'] = trace.method
            summary_data.append(metrics)
        summary = pd.DataFrame(summary_data).set_index('method')
        self.logger.info(f"Summary table built for {len(summary)} method(s)")
        return summary

    # Snap round-off excursions back into [0, 1]
    def _clip_fidelities(self, df: pd.DataFrame, columns: List[str]) -> pd.DataFrame:
        df = df.copy()
        tol = self.clip_tolerance
        for col in columns:
            values = df[col].to_numpy(dtype=float)
            outside = (values < -tol) | (values > 1.0 + tol)
            if np.any(outside):
                self.logger.warning(f"Column '{col}' has {int(outside.sum())} value(s) outside [0, 1]")
            near = ~outside & ~np.isnan(values)
            values[near] = np.clip(values[near], 0.0, 1.0)
            df[col] = values
        return df
