import logging
import os
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from utils.errors import ConfigError
from utils.exact_evolution import ExactSolverConfig
from utils.file_handler import parse_initial, parse_optional_float, parse_spin, read_config_file
from utils.fidelity import InitialState
from utils.linalg import Tolerances, set_tolerances
from utils.method_engine import parse_methods
from utils.spin_algebra import SpinParams

load_dotenv()

logger = logging.getLogger(__name__)

TOOL_NAME = "spinrwa"
TOOL_VERSION = "0.1.0"

THREADS_ENV = "SPINRWA_THREADS"
LOG_LEVEL_ENV = "SPINRWA_LOG_LEVEL"


class ConfigManager:
    """Resolves run settings: built-in defaults < JSON config file < explicit flags."""

    # Key constants for run settings
    SPIN_KEY = 'spin'
    Q_KEY = 'Q'
    B0_KEY = 'B0'
    B1_KEY = 'B1'
    OMEGA_KEY = 'omega'
    METHODS_KEY = 'methods'
    T_MAX_PI_KEY = 't_max_pi'
    SAMPLES_KEY = 'samples'
    INITIAL_KEY = 'initial'
    M_TARGET_KEY = 'm_target'
    XI_KEY = 'xi'
    DT_KEY = 'dt'
    RENORM_INTERVAL_KEY = 'renorm_interval'
    NO_RENORMALIZE_KEY = 'no_renormalize'
    ALLOW_LARGE_DT_KEY = 'allow_large_dt'
    OUT_KEY = 'out'
    VARY_KEY = 'vary'
    FROM_KEY = 'from'
    TO_KEY = 'to'
    POINTS_KEY = 'points'
    METRIC_KEY = 'metric'
    WINDOW_KEY = 'window_pi'
    PARALLEL_KEY = 'parallel'
    TOLERANCES_KEY = 'tolerances'

    DEFAULTS: Dict[str, Any] = {
        SPIN_KEY: 3.0,
        Q_KEY: 1.0,
        B0_KEY: 0.05,
        B1_KEY: 0.5,
        OMEGA_KEY: 1.0,
        METHODS_KEY: 'rwa-full,rwa-reduced,chrw',
        T_MAX_PI_KEY: 20.0,
        SAMPLES_KEY: 1000,
        INITIAL_KEY: 'M=0',
        M_TARGET_KEY: None,
        XI_KEY: None,
        DT_KEY: None,
        RENORM_INTERVAL_KEY: 1000,
        NO_RENORMALIZE_KEY: False,
        ALLOW_LARGE_DT_KEY: False,
        OUT_KEY: None,
        VARY_KEY: 'omega',
        FROM_KEY: 0.5,
        TO_KEY: 1.5,
        POINTS_KEY: 101,
        METRIC_KEY: 'operator',
        WINDOW_KEY: 20.0,
        PARALLEL_KEY: 1,
        TOLERANCES_KEY: {},
    }

    VARY_CHOICES = (OMEGA_KEY, B1_KEY)
    METRIC_CHOICES = ('operator', 'state')

    @staticmethod
    def initialize_config() -> Dict[str, Any]:
        """Fresh copy of the defaults."""
        config = dict(ConfigManager.DEFAULTS)
        config[ConfigManager.TOLERANCES_KEY] = {}
        return config

    @staticmethod
    def merge(config: Dict[str, Any], overrides: Dict[str, Any], source: str) -> Dict[str, Any]:
        unknown = sorted(set(overrides) - set(ConfigManager.DEFAULTS))
        if unknown:
            raise ConfigError(f"Unknown settings in {source}: {unknown}")
        merged = dict(config)
        for key, value in overrides.items():
            if key == ConfigManager.TOLERANCES_KEY:
                if not isinstance(value, dict):
                    raise ConfigError(f"'{key}' must be an object of tolerance overrides")
                merged[key] = {**merged.get(key, {}), **value}
            else:
                merged[key] = value
        logger.debug(f"Applied {len(overrides)} setting(s) from {source}")
        return merged

    @staticmethod
    def resolve(flags: Dict[str, Any], config_path: Optional[str] = None) -> Dict[str, Any]:
        """``flags`` must hold only the options actually given on the command line."""
        config = ConfigManager.initialize_config()
        if config_path:
            config = ConfigManager.merge(config, read_config_file(config_path), config_path)
        config = ConfigManager.merge(config, flags, "command line")
        ConfigManager.validate(config)
        return config

    @staticmethod
    def validate(config: Dict[str, Any]):
        """Normalise types in place and reject impossible combinations."""
        c = ConfigManager
        config[c.SPIN_KEY] = parse_spin(config[c.SPIN_KEY])
        for key in (c.Q_KEY, c.B0_KEY, c.B1_KEY, c.OMEGA_KEY, c.T_MAX_PI_KEY, c.FROM_KEY, c.TO_KEY, c.WINDOW_KEY):
            try:
                config[key] = float(config[key])
            except (TypeError, ValueError):
                raise ConfigError(f"'{key}' must be a number, got {config[key]!r}")
        for key in (c.SAMPLES_KEY, c.POINTS_KEY, c.PARALLEL_KEY, c.RENORM_INTERVAL_KEY):
            try:
                config[key] = int(config[key])
            except (TypeError, ValueError):
                raise ConfigError(f"'{key}' must be an integer, got {config[key]!r}")
        config[c.M_TARGET_KEY] = parse_optional_float(config[c.M_TARGET_KEY])
        config[c.XI_KEY] = parse_optional_float(config[c.XI_KEY])
        config[c.DT_KEY] = parse_optional_float(config[c.DT_KEY])
        if isinstance(config[c.METHODS_KEY], (list, tuple)):
            config[c.METHODS_KEY] = ",".join(config[c.METHODS_KEY])
        parse_methods(config[c.METHODS_KEY])
        parse_initial(config[c.INITIAL_KEY])

        if config[c.SAMPLES_KEY] < 2:
            raise ConfigError(f"samples must be at least 2, got {config[c.SAMPLES_KEY]}")
        if config[c.POINTS_KEY] < 2:
            raise ConfigError(f"points must be at least 2, got {config[c.POINTS_KEY]}")
        if not config[c.T_MAX_PI_KEY] > 0:
            raise ConfigError("t_max_pi must be positive")
        if config[c.PARALLEL_KEY] < 1:
            raise ConfigError("parallel must be at least 1")
        if config[c.VARY_KEY] not in c.VARY_CHOICES:
            raise ConfigError(f"vary must be one of {c.VARY_CHOICES}, got {config[c.VARY_KEY]!r}")
        if config[c.METRIC_KEY] not in c.METRIC_CHOICES:
            raise ConfigError(f"metric must be one of {c.METRIC_CHOICES}, got {config[c.METRIC_KEY]!r}")
        known = set(Tolerances.__dataclass_fields__)
        bad = sorted(set(config[c.TOLERANCES_KEY]) - known)
        if bad:
            raise ConfigError(f"Unknown tolerance keys: {bad}")

    @staticmethod
    def spin_params(config: Dict[str, Any]) -> SpinParams:
        params = SpinParams(
            spin=config[ConfigManager.SPIN_KEY],
            Q=config[ConfigManager.Q_KEY],
            B0=config[ConfigManager.B0_KEY],
            B1=config[ConfigManager.B1_KEY],
            omega=config[ConfigManager.OMEGA_KEY],
        )
        if not params.quadrupole_dominant:
            logger.warning(f"B0={params.B0:g} >= Q={params.Q:g}: outside the quadrupole-dominant regime")
        return params

    @staticmethod
    def solver_config(config: Dict[str, Any]) -> ExactSolverConfig:
        return ExactSolverConfig(
            dt=config[ConfigManager.DT_KEY],
            renormalize=not config[ConfigManager.NO_RENORMALIZE_KEY],
            renorm_interval=config[ConfigManager.RENORM_INTERVAL_KEY],
            allow_large_dt=bool(config[ConfigManager.ALLOW_LARGE_DT_KEY]),
        )

    @staticmethod
    def methods(config: Dict[str, Any]) -> List[str]:
        return parse_methods(config[ConfigManager.METHODS_KEY])

    @staticmethod
    def initial_state(config: Dict[str, Any]) -> InitialState:
        return parse_initial(config[ConfigManager.INITIAL_KEY])

    @staticmethod
    def apply_tolerances(config: Dict[str, Any]) -> Tolerances:
        return set_tolerances(**config.get(ConfigManager.TOLERANCES_KEY, {}))

    @staticmethod
    def thread_cap() -> Optional[int]:
        raw = os.getenv(THREADS_ENV)
        if not raw:
            return None
        try:
            cap = int(raw)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got '{raw}'")
        return max(1, cap)

    @staticmethod
    def worker_count(config: Dict[str, Any]) -> int:
        requested = config[ConfigManager.PARALLEL_KEY]
        cap = ConfigManager.thread_cap()
        if cap is not None and requested > cap:
            logger.info(f"Clamping parallel={requested} to {THREADS_ENV}={cap}")
            return cap
        return requested

    @staticmethod
    def default_log_level() -> str:
        return os.getenv(LOG_LEVEL_ENV, "INFO").upper()
