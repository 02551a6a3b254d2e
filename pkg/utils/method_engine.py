import logging
from typing import Callable, List, Optional

from utils.chrw import CHRW_METHOD, ChrwPropagator
from utils.errors import ConfigError
from utils.exact_evolution import EXACT_METHOD, ExactPropagator, ExactSolverConfig
from utils.linalg import Propagator
from utils.rwa_full import RWA_FULL_METHOD, FullRwaPropagator
from utils.rwa_reduced import RWA_REDUCED_METHOD, RWA_ZEEMAN_METHOD, ReducedRwaPropagator, ZeemanRwaPropagator
from utils.spin_algebra import SpinParams

logger = logging.getLogger(__name__)

PropagatorFn = Callable[[float], Propagator]


def parse_methods(text: str) -> List[str]:
    """Split a comma-separated method list, keeping order and dropping repeats."""
    names = [part.strip() for part in text.split(",") if part.strip()]
    if not names:
        raise ConfigError("At least one method is required")
    unknown = [n for n in names if n not in MethodEngine.METHODS]
    if unknown:
        raise ConfigError(
            f"Unknown method(s) {unknown}; choose from {', '.join(MethodEngine.METHODS)}"
        )
    return list(dict.fromkeys(names))


class MethodEngine:
    METHODS = {
        EXACT_METHOD: ExactPropagator,
        RWA_ZEEMAN_METHOD: ZeemanRwaPropagator,
        RWA_REDUCED_METHOD: ReducedRwaPropagator,
        RWA_FULL_METHOD: FullRwaPropagator,
        CHRW_METHOD: ChrwPropagator,
    }

    def __init__(self,
                 params: SpinParams,
                 m_target: Optional[float] = None,
                 xi_override: Optional[float] = None,
                 solver_cfg: Optional[ExactSolverConfig] = None):
        self.params = params
        self.m_target = m_target
        self.xi_override = xi_override
        self.solver_cfg = solver_cfg or ExactSolverConfig()

    def build(self, name: str) -> PropagatorFn:
        """Propagator factory for one method at this parameter point."""
        if name not in self.METHODS:
            raise ConfigError(f"Unknown method '{name}'")
        factory = self.METHODS[name]
        if name == EXACT_METHOD:
            return factory(self.params, self.solver_cfg)
        if name == RWA_REDUCED_METHOD:
            return factory(self.params, m_target=self.m_target)
        if name == CHRW_METHOD:
            return factory(self.params, m_target=self.m_target, xi_override=self.xi_override)
        return factory(self.params)
