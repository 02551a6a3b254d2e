import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Optional, Union

from utils.errors import ConfigError
from utils.fidelity import InitialState


def read_config_file(path: Union[str, Path, None]) -> Dict[str, Any]:
    if path is None:
        raise ConfigError("No config file given")

    path = Path(path)
    if path.suffix.lower() != ".json":
        raise ConfigError("Unsupported config type. Please pass a JSON file.")
    try:
        with path.open("r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"Failed to read the config file: {str(e)}")
    if not isinstance(data, dict):
        raise ConfigError("Config file must contain a JSON object")
    if not data:
        raise ConfigError("Config file contains no settings")
    return data


def parse_spin(value: Union[str, int, float]) -> float:
    """Accept 3, 2.5, "2.5" or "5/2"."""
    try:
        spin = float(Fraction(str(value).strip()))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"Cannot read spin value '{value}'")
    doubled = 2.0 * spin
    if doubled < 1 or abs(doubled - round(doubled)) > 1e-9:
        raise ConfigError(f"Spin must be a positive half-integer, got {value}")
    return spin


def parse_initial(value: Union[str, InitialState]) -> InitialState:
    """'M=<m>' selects the basis state |I, m>; 'x' the Ix eigenstate."""
    if isinstance(value, InitialState):
        return value
    text = str(value).strip()
    if text.lower() == "x":
        return InitialState(kind="x")
    key, sep, rest = text.partition("=")
    if sep and key.strip().upper() == "M":
        try:
            return InitialState(kind="basis", m=float(Fraction(rest.strip())))
        except (ValueError, ZeroDivisionError):
            pass
    raise ConfigError(f"Initial state must be 'M=<m>' or 'x', got '{value}'")


def parse_optional_float(value: Any) -> Optional[float]:
    if value is None or (isinstance(value, str) and value.strip().lower() in ("", "none", "auto")):
        return None
    try:
        return float(Fraction(str(value).strip()))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"Expected a number, got '{value}'")
