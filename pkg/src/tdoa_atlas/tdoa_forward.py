"""Forward TDOA maps, their Jacobian, rank classification and level sets."""

from __future__ import annotations

import enum
import math
from typing import NamedTuple

import numpy as np

from .errors import AtSensorError
from .exterior_algebra import EucVec2, wedge2
from .sensor_config import (
    Point2,
    SensorConfig,
    collinear_membership,
    halfline_membership,
)

AT_SENSOR_RTOL = 1e-12
RANK_BAND_RTOL = 1e-9
LEVEL_SET_SPAN = 5.0


class TauPair(NamedTuple):
    tau1: float
    tau2: float


class TauTriple(NamedTuple):
    tau10: float
    tau20: float
    tau21: float


class Jacobian2(NamedTuple):
    """Rows are the gradients of tau1 and tau2."""

    row1: EucVec2
    row2: EucVec2


class RankLabel(enum.Enum):
    RANK2 = "rank2"
    RANK1 = "rank1"
    RANK0 = "rank0"
    AT_SENSOR = "at_sensor"


def _distances(cfg: SensorConfig, x) -> tuple[float, float, float]:
    m0, m1, m2 = cfg.user_sensors
    x0, x1 = float(x[0]), float(x[1])
    return (
        math.hypot(x0 - m0[0], x1 - m0[1]),
        math.hypot(x0 - m1[0], x1 - m1[1]),
        math.hypot(x0 - m2[0], x1 - m2[1]),
    )


def _range_difference(mi, mj, di: float, dj: float, x0: float, x1: float) -> float:
    """d_j - d_i as <m_i - m_j, 2x - m_i - m_j> / (d_i + d_j), free of cancellation far away."""
    return ((mi[0] - mj[0]) * (2.0 * x0 - mi[0] - mj[0])
            + (mi[1] - mj[1]) * (2.0 * x1 - mi[1] - mj[1])) / (di + dj)


def tau2(cfg: SensorConfig, x) -> TauPair:
    t = tau2_star(cfg, x)
    return TauPair(t[0], t[1])


def tau2_star(cfg: SensorConfig, x) -> TauTriple:
    m0, m1, m2 = cfg.user_sensors
    d0, d1, d2 = _distances(cfg, x)
    x0, x1 = float(x[0]), float(x[1])
    return TauTriple(
        _range_difference(m0, m1, d0, d1, x0, x1),
        _range_difference(m0, m2, d0, d2, x0, x1),
        _range_difference(m1, m2, d1, d2, x0, x1),
    )


def tau2_many(cfg: SensorConfig, xs: np.ndarray) -> np.ndarray:
    """Vectorized tau2 over an (..., 2) array of points; returns (..., 2)."""
    xs = np.asarray(xs, dtype=float)
    x0 = np.ascontiguousarray(xs[..., 0])
    x1 = np.ascontiguousarray(xs[..., 1])
    m0, m1, m2 = cfg.user_sensors
    d0 = np.hypot(x0 - m0[0], x1 - m0[1])
    out = np.empty(xs.shape)
    for k, mi in enumerate((m1, m2)):
        di = np.hypot(x0 - mi[0], x1 - mi[1])
        num = (m0[0] - mi[0]) * (2.0 * x0 - m0[0] - mi[0]) \
            + (m0[1] - mi[1]) * (2.0 * x1 - m0[1] - mi[1])
        out[..., k] = num / (d0 + di)
    return out


def jacobian(cfg: SensorConfig, x) -> Jacobian2:
    dists = _distances(cfg, x)
    if min(dists) <= AT_SENSOR_RTOL * cfg.scale:
        raise AtSensorError(f"x = {tuple(x)} coincides with a sensor")
    units = [
        ((x[0] - m[0]) / d, (x[1] - m[1]) / d)
        for m, d in zip(cfg.user_sensors, dists)
    ]
    u0 = units[0]
    return Jacobian2(
        EucVec2(units[1][0] - u0[0], units[1][1] - u0[1]),
        EucVec2(units[2][0] - u0[0], units[2][1] - u0[1]),
    )


def det_jacobian(cfg: SensorConfig, x) -> float:
    j = jacobian(cfg, x)
    return wedge2(j.row1, j.row2)


def rank_at(cfg: SensorConfig, x, band: float | None = None) -> RankLabel:
    """Rank of the Jacobian, decided by exact membership in the degeneracy locus."""
    if band is None:
        band = RANK_BAND_RTOL * cfg.scale
    if min(_distances(cfg, x)) <= band:
        return RankLabel.AT_SENSOR
    if cfg.is_general:
        parts = halfline_membership(cfg, x, band)
        if any(part != "0" for _, part in parts):
            return RankLabel.RANK1
        return RankLabel.RANK2
    parts = collinear_membership(cfg, x, band)
    if "rc" in parts:
        return RankLabel.RANK0
    if "r0" in parts:
        return RankLabel.RANK1
    return RankLabel.RANK2


def sample_level_set(cfg: SensorConfig, i: int, tau: float, n: int,
                     span: float = LEVEL_SET_SPAN) -> list[Point2]:
    """n points of {x : d_i(x) - d_0(x) = tau} for i in {1, 2}."""
    if i not in (1, 2):
        raise ValueError("i must be 1 or 2")
    if n < 2:
        raise ValueError("n must be at least 2")
    m0 = np.asarray(cfg.user_sensors[0])
    mi = np.asarray(cfg.user_sensors[i])
    d = float(np.hypot(*(mi - m0)))
    u = (mi - m0) / d
    perp = np.array([-u[1], u[0]])
    tau = float(tau)
    edge_tol = 1e-12 * d

    if abs(tau) > d + edge_tol:
        return []
    if abs(abs(tau) - d) <= edge_tol:
        # degenerate hyperbola: the half-line beyond the nearer focus
        base, direction = (m0, -u) if tau > 0 else (mi, u)
        s = np.linspace(0.0, span * d, n)
        pts = base + s[:, None] * direction
    elif tau == 0.0:
        s = np.linspace(-span * d, span * d, n)
        pts = 0.5 * (m0 + mi) + s[:, None] * perp
    else:
        semi_major = 0.5 * abs(tau)
        semi_minor = math.sqrt((0.5 * d) ** 2 - semi_major**2)
        toward = -math.copysign(1.0, tau)
        s = np.linspace(-math.asinh(span), math.asinh(span), n)
        pts = (
            0.5 * (m0 + mi)
            + (toward * semi_major * np.cosh(s))[:, None] * u
            + (semi_minor * np.sinh(s))[:, None] * perp
        )
    return [Point2(float(p[0]), float(p[1])) for p in pts]
