import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from dateutil import parser as date_parser
from dateutil.tz import tzutc

logger = logging.getLogger(__name__)

MANIFEST_KEYS = [
    'tool', 'version', 'command', 'created_utc', 'wall_clock_seconds', 'parameters', 'solver',
    'tolerances', 'grid', 'methods', 'initial_state', 'summary', 'warnings',
]


def manifest_path(out: Union[str, Path]) -> Path:
    out = Path(out)
    stem = out.name[:-4] if out.suffix.lower() == ".csv" else out.name
    return out.with_name(stem + ".manifest.json")


def utc_now() -> str:
    return datetime.now(tz=tzutc()).isoformat()


def build_manifest(tool: str,
                   version: str,
                   command: str,
                   parameters: Dict[str, Any],
                   solver: Dict[str, Any],
                   tolerances: Dict[str, Any],
                   grid: Dict[str, Any],
                   methods: List[str],
                   initial_state: Optional[str],
                   wall_clock_seconds: float,
                   summary: Optional[Dict[str, Any]] = None,
                   warnings: Optional[List[str]] = None,
                   created_utc: Optional[str] = None) -> Dict[str, Any]:
    manifest = {
        'tool': tool,
        'version': version,
        'command': command,
        'created_utc': created_utc or utc_now(),
        'wall_clock_seconds': float(wall_clock_seconds),
        'parameters': parameters,
        'solver': solver,
        'tolerances': tolerances,
        'grid': grid,
        'methods': list(methods),
        'initial_state': initial_state,
        'summary': summary or {},
        'warnings': list(dict.fromkeys(warnings or [])),
    }
    return {key: manifest[key] for key in MANIFEST_KEYS}


def export_manifest(manifest: Dict[str, Any], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    logger.info(f"Wrote manifest to {path}")
    return path


def read_manifest(path: Union[str, Path]) -> Dict[str, Any]:
    """Load a manifest, checking its keys and that created_utc is a timezone-aware ISO stamp."""
    with Path(path).open("r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    missing = [key for key in MANIFEST_KEYS if key not in manifest]
    if missing:
        raise ValueError(f"Manifest {path} is missing keys: {missing}")
    try:
        created = date_parser.isoparse(manifest['created_utc'])
    except (AttributeError, TypeError, ValueError) as exc:
        raise ValueError(f"Manifest {path} has an unreadable created_utc: {exc}") from exc
    if created.tzinfo is None:
        raise ValueError(f"Manifest {path} has a created_utc without a timezone")
    return manifest
