import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from exports.export_engine import build_manifest, csv_path, export_manifest, export_table_csv, manifest_path
from utils.config_manager import TOOL_NAME, TOOL_VERSION, ConfigManager
from utils.errors import PreconditionError
from utils.exact_evolution import ExactSolverConfig
from utils.fidelity import OPERATOR, InitialState, trace_methods, window_average
from utils.linalg import set_tolerances
from utils.method_engine import MethodEngine
from utils.spin_algebra import SpinParams
from utils.trace_table import TraceTableBuilder

logger = logging.getLogger(__name__)

DEFAULT_OUT = "sweep"


@dataclass(frozen=True)
class SweepSpec:
    vary: str
    start: float
    stop: float
    points: int
    fixed: SpinParams
    methods: Tuple[str, ...]
    average_window: float = 20.0
    metric: str = OPERATOR

    def __post_init__(self):
        if self.vary not in ConfigManager.VARY_CHOICES:
            raise PreconditionError(f"Cannot sweep '{self.vary}'")
        if not self.start < self.stop:
            raise PreconditionError(f"Sweep needs from < to, got {self.start} and {self.stop}")
        if self.points < 2:
            raise PreconditionError(f"Sweep needs at least 2 points, got {self.points}")

    @property
    def metric_column(self) -> str:
        return "mean_F_op" if self.metric == OPERATOR else "mean_f_state"

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.points)

    def to_dict(self) -> Dict[str, Any]:
        return {"vary": self.vary, "from": self.start, "to": self.stop, "points": self.points,
                "average_window_pi": self.average_window, "metric": self.metric}


@dataclass(frozen=True)
class SweepTask:
    """Everything one worker needs for one grid point; must stay picklable."""
    value: float
    spec: SweepSpec
    samples: int
    initial: InitialState
    solver: ExactSolverConfig
    m_target: Optional[float] = None
    xi: Optional[float] = None
    tolerances: Dict[str, Any] = field(default_factory=dict)


def evaluate_point(task: SweepTask) -> Tuple[List[Dict[str, Any]], List[str]]:
    """Window-averaged fidelity of every method at one grid point; failures become nan rows."""
    spec = task.spec
    set_tolerances(**task.tolerances)
    try:
        params = spec.fixed.with_updates(**{spec.vary: float(task.value)})
        engine = MethodEngine(params, m_target=task.m_target, xi_override=task.xi, solver_cfg=task.solver)
        traces = trace_methods(params, spec.methods, spec.average_window, task.samples, task.initial,
                               engine=engine, solver_cfg=task.solver)
    except Exception as exc:
        message = f"{spec.vary}={task.value:.6g}: point failed ({type(exc).__name__}: {exc})"
        logger.warning(message)
        return [{"sweep_value": task.value, "method": m, spec.metric_column: np.nan} for m in spec.methods], [message]

    rows, warnings = [], []
    for trace in traces:
        mean = window_average(trace, spec.metric, spec.average_window)
        rows.append({"sweep_value": task.value, "method": trace.method, spec.metric_column: mean})
        if trace.failed:
            warnings.append(f"{spec.vary}={task.value:.6g}: {trace.method} failed ({trace.error})")
    return rows, warnings


def run_sweep(tasks: List[SweepTask], workers: int) -> List[Tuple[List[Dict[str, Any]], List[str]]]:
    """Results in task order regardless of worker count."""
    if workers <= 1 or len(tasks) <= 1:
        return [evaluate_point(task) for task in tasks]
    logger.info(f"Running {len(tasks)} grid points on {workers} workers")
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(evaluate_point, tasks))


def cmd_sweep(config: Dict[str, Any]) -> int:
    """Window-averaged fidelity against omega or B1; writes CSV and manifest."""
    started = time.perf_counter()

    # SETUP
    tolerances = ConfigManager.apply_tolerances(config)
    fixed = ConfigManager.spin_params(config)
    spec = SweepSpec(
        vary=config[ConfigManager.VARY_KEY],
        start=config[ConfigManager.FROM_KEY],
        stop=config[ConfigManager.TO_KEY],
        points=config[ConfigManager.POINTS_KEY],
        fixed=fixed,
        methods=tuple(ConfigManager.methods(config)),
        average_window=config[ConfigManager.WINDOW_KEY],
        metric=config[ConfigManager.METRIC_KEY],
    )
    solver = ConfigManager.solver_config(config)
    initial = ConfigManager.initial_state(config)
    initial.vector(fixed.spin)
    tasks = [
        SweepTask(value=float(v), spec=spec, samples=config[ConfigManager.SAMPLES_KEY], initial=initial,
                  solver=solver, m_target=config[ConfigManager.M_TARGET_KEY], xi=config[ConfigManager.XI_KEY],
                  tolerances=dict(config[ConfigManager.TOLERANCES_KEY]))
        for v in spec.values()
    ]

    # GRID
    results = run_sweep(tasks, ConfigManager.worker_count(config))
    rows = [row for point_rows, _ in results for row in point_rows]
    warnings = [w for _, point_warnings in results for w in point_warnings]
    table = TraceTableBuilder().sweep_table(rows, spec.metric_column)

    # EXPORT
    out = config[ConfigManager.OUT_KEY] or DEFAULT_OUT
    export_table_csv(table, csv_path(out))
    grid = spec.to_dict()
    grid["samples"] = config[ConfigManager.SAMPLES_KEY]
    manifest = build_manifest(
        tool=TOOL_NAME,
        version=TOOL_VERSION,
        command="sweep",
        parameters=fixed.to_dict(),
        solver=solver.to_dict(),
        tolerances=tolerances.to_dict(),
        grid=grid,
        methods=list(spec.methods),
        initial_state=initial.label,
        wall_clock_seconds=time.perf_counter() - started,
        warnings=warnings,
    )
    export_manifest(manifest, manifest_path(out))

    if table[spec.metric_column].isna().all():
        logger.error("Every grid point failed; see the manifest warnings")
        return 1
    return 0
