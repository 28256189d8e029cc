"""The complete TDOA map onto the plane H and the projection step for noisy data."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import exterior_algebra as ea
from .errors import OffPlane
from .localizer import FiberResult, locate
from .sensor_config import SensorConfig, build_config
from .tau_domain import RegionLabel, classify_tau
from .tdoa_forward import TauPair, TauTriple, tau2_star

ON_PLANE_RTOL = 1e-9
H_NORMAL = (1.0, -1.0, 1.0)

NoiseModel = Callable[[np.random.Generator, float, int], np.ndarray]


def gaussian_noise(rng: np.random.Generator, sigma: float, size: int) -> np.ndarray:
    return rng.normal(0.0, sigma, size)


@dataclass(frozen=True)
class NoisyTriple:
    tau: TauTriple
    sigma: float
    seed: int | None


def plane_residual(t) -> float:
    return float(t[0]) - float(t[1]) + float(t[2])


def project_to_H(t) -> TauTriple:
    """Orthogonal projection onto tau10 - tau20 + tau21 = 0."""
    s = plane_residual(t) / 3.0
    return TauTriple(float(t[0]) - s, float(t[1]) + s, float(t[2]) - s)


def p3(t) -> TauPair:
    return TauPair(float(t[0]), float(t[1]))


def lift(tau) -> TauTriple:
    """The unique point of H above tau."""
    t1, t2 = float(tau[0]), float(tau[1])
    return TauTriple(t1, t2, t2 - t1)


def _plane_scale(cfg: SensorConfig) -> float:
    return cfg.d10 + cfg.d20 + cfg.d21


def _check_on_plane(cfg: SensorConfig, t, on_plane_tol: float) -> None:
    r = plane_residual(t)
    if abs(r) > on_plane_tol * _plane_scale(cfg):
        raise OffPlane(f"tau10 - tau20 + tau21 = {r!r}; project onto H first")


def locate_star(cfg: SensorConfig, t, on_plane_tol: float = ON_PLANE_RTOL) -> FiberResult:
    _check_on_plane(cfg, t, on_plane_tol)
    return locate(cfg, p3(t))


def classify_star(cfg: SensorConfig, t, on_plane_tol: float = ON_PLANE_RTOL) -> RegionLabel:
    _check_on_plane(cfg, t, on_plane_tol)
    return classify_tau(cfg, p3(t))


def change_reference(cfg: SensorConfig, t, ref: int,
                     on_plane_tol: float = ON_PLANE_RTOL) -> TauPair:
    """Drop one coordinate of a triple on H.

    ref 0 keeps (tau10, tau20), ref 1 keeps (tau10, tau21), ref 2 keeps (tau20, tau21).
    """
    _check_on_plane(cfg, t, on_plane_tol)
    t10, t20, t21 = (float(c) for c in t)
    if ref == 0:
        return TauPair(t10, t20)
    if ref == 1:
        return TauPair(t10, t21)
    if ref == 2:
        return TauPair(t20, t21)
    raise ValueError("ref must be 0, 1 or 2")


def reference_config(cfg: SensorConfig, ref: int) -> SensorConfig:
    """Configuration whose reference sensor is the caller's m_ref.

    ref 1 orders the sensors (m1, m0, m2), ref 2 orders them (m2, m0, m1).
    """
    m0, m1, m2 = cfg.user_sensors
    order = {0: (m0, m1, m2), 1: (m1, m0, m2), 2: (m2, m0, m1)}[ref]
    return build_config(*order, rel_tol=cfg.rel_tol)


def referenced_pair(pair, ref: int) -> TauPair:
    """Convert the output of change_reference into the tau pair of reference_config."""
    a, b = float(pair[0]), float(pair[1])
    if ref == 0:
        return TauPair(a, b)
    if ref == 1:
        return TauPair(-a, b)
    return TauPair(-a, -b)


def locate_with_reference(cfg: SensorConfig, t, ref: int) -> FiberResult:
    pair = change_reference(cfg, t, ref)
    return locate(reference_config(cfg, ref), referenced_pair(pair, ref))


def _pair_tau(t, i: int, j: int) -> float:
    """tau_ji = d_j - d_i read off a complete triple."""
    t10, t20, t21 = (float(c) for c in t)
    table = {(1, 0): t10, (2, 0): t20, (2, 1): t21}
    if i == j:
        return 0.0
    if (j, i) in table:
        return table[(j, i)]
    return -table[(i, j)]


def lifted_difference(cfg: SensorConfig, t, j: int, i: int) -> ea.MinkVec3:
    """D_ji = (m_j - m_i, tau_ji) for a complete triple t."""
    pts = cfg.user_sensors
    return ea.MinkVec3(pts[j][0] - pts[i][0], pts[j][1] - pts[i][1], _pair_tau(t, i, j))


def complete_feasible(cfg: SensorConfig, t, tol: float = 0.0) -> bool:
    """True when every ||D_ji(t)||^2 >= -tol."""
    return all(
        ea.mink_norm2(lifted_difference(cfg, t, j, i)) >= -tol
        for j, i in ((1, 0), (2, 0), (2, 1))
    )


def wedge_norm(cfg: SensorConfig, t, k: int) -> float:
    """||D_ik ^ D_jk||^2 with {i, j, k} = {0, 1, 2}, i < j."""
    i, j = sorted({0, 1, 2} - {k})
    return ea.bivec_inner(
        ea.wedge(lifted_difference(cfg, t, i, k), lifted_difference(cfg, t, j, k)),
        ea.wedge(lifted_difference(cfg, t, i, k), lifted_difference(cfg, t, j, k)),
    )


def synthesize_noisy(cfg: SensorConfig, x, sigma: float, seed: int | None,
                     noise: NoiseModel = gaussian_noise) -> NoisyTriple:
    """Forward triple of x plus independent noise on each component."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    exact = np.asarray(tau2_star(cfg, x), dtype=float)
    if sigma == 0:
        return NoisyTriple(TauTriple(*map(float, exact)), 0.0, seed)
    rng = np.random.default_rng(seed)
    noisy = exact + noise(rng, sigma, 3)
    return NoisyTriple(TauTriple(*map(float, noisy)), float(sigma), seed)


def mle_locate(cfg: SensorConfig, t) -> tuple[TauTriple, FiberResult]:
    """Project a measured triple onto H, then invert in closed form."""
    projected = project_to_H(t)
    return projected, locate_star(cfg, projected)
