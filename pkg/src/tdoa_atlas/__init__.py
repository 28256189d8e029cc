"""Exact geometry of planar TDOA localization with three receivers."""

from .errors import (
    AmbiguousComponent,
    AtSensorError,
    CoincidentPlanes,
    DegenerateConfigError,
    DependentForms,
    DependentPlanes,
    GeometryClassError,
    IllConditioned,
    NoRealRoots,
    OffPlane,
    TdoaAtlasError,
)
from .localizer import FiberResult, locate, oracle_locate, solve_lambda
from .sensor_config import SensorConfig, build_config, load_config
from .tau_domain import RegionLabel, classify_tau
from .tdoa_forward import TauPair, TauTriple, tau2, tau2_star

__version__ = "0.1.0"
