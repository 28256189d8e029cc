"""The bifurcation curve: preimage of the in-image arcs of the ellipse {a = 0}.

Sources on the curve separate the region where localization is unique from
the three regions where every measurement has two admissible sources.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import IllConditioned
from .localizer import l21_line
from .sensor_config import Point2, SensorConfig
from .tau_domain import (
    RegionKind,
    _grad_a_norm,
    build_p2,
    classify_tau,
    coeff_a,
    coefficients,
    default_tol,
    tangency_points,
    user_frame,
    _require_general,
)
from .tdoa_forward import TauPair, tau2

DEFAULT_GUARD = 1e-6
QUINTIC_DEGREE = 5
N_MONOMIALS = 21
MIN_FIT_SAMPLES = 3 * N_MONOMIALS

# arcs of E bounded by consecutive tangency points, keyed by U component
_ARC_ENDPOINTS = {0: ("T1p", "T2p"), 1: ("T0p", "T2m"), 2: ("T0m", "T1m")}


@dataclass(frozen=True)
class CurveSample:
    mu: float
    tau_on_E: TauPair
    x: Point2
    branch: int


@dataclass(frozen=True)
class BifurcationSamples:
    samples: tuple[CurveSample, ...]
    skipped: int
    requested: int


def _pencil(cfg: SensorConfig, n: int) -> list[tuple[float, TauPair]]:
    _require_general(cfg)
    if n < 8 or n % 2:
        raise ValueError("n must be an even number >= 8")
    fr = user_frame(cfg)
    out = []
    for j in range(n):
        phi = 2.0 * math.pi * j / n
        mu1, mu2 = math.cos(phi), math.sin(phi)
        t = fr.abs_wedge / math.hypot(
            mu2 * fr.d10v[0] - mu1 * fr.d20v[0], mu2 * fr.d10v[1] - mu1 * fr.d20v[1]
        )
        out.append((phi, TauPair(t * mu1, t * mu2)))
    return out


def sample_E(cfg: SensorConfig, n: int) -> list[TauPair]:
    """n points of the ellipse from n/2 pencil directions in [0, pi), each with both signs.

    Sample j and sample j + n/2 are antipodal.
    """
    return [tau for _, tau in _pencil(cfg, n)]


def quintic_point(cfg: SensorConfig, tau) -> Point2:
    """x(tau) = L0 - c / (2 b) * (plane part of v); defined wherever b != 0."""
    _, b, c = coefficients(cfg, tau)
    line = l21_line(cfg, tau)
    lam = -c / (2.0 * b)
    return Point2(line.base[0] + lam * line.direction[0], line.base[1] + lam * line.direction[1])


def arc_branch(cfg: SensorConfig, tau) -> int | None:
    """U component adjacent to the arc of E containing tau, or None for the other arcs."""
    tangency = tangency_points(cfg).tangency()
    angle = {name: math.atan2(t[1], t[0]) for name, t in tangency.items()}
    names = sorted(angle, key=angle.__getitem__)
    theta = math.atan2(tau[1], tau[0])
    pos = sum(1 for n in names if angle[n] <= theta)
    pair = {names[pos - 1], names[pos % len(names)]}
    for i, ends in _ARC_ENDPOINTS.items():
        if pair == set(ends):
            return i
    return None


def bifurcation_samples(cfg: SensorConfig, n: int = 512,
                        guard: float = DEFAULT_GUARD) -> BifurcationSamples:
    """Curve points from the ellipse arcs that lie in the image of the TDOA map."""
    if guard <= 0:
        raise ValueError("guard must be positive")
    limit = guard * cfg.scale**3
    samples, skipped = [], 0
    for phi, tau in _pencil(cfg, n):
        _, b, _ = coefficients(cfg, tau)
        if abs(b) <= limit:
            skipped += 1
            continue
        label = classify_tau(cfg, tau)
        if label.sub != "EllipseArcBoundary":
            continue
        branch = arc_branch(cfg, tau)
        if branch is None:
            continue
        samples.append(CurveSample(phi, tau, quintic_point(cfg, tau), branch))
    return BifurcationSamples(tuple(samples), skipped, n)


# --- source-plane regions ---------------------------------------------------


class XRegionKind(enum.Enum):
    E_MINUS_PRE = "EMinusPre"
    UTILDE_PRE = "UtildePre"
    NEAR_CURVE = "NearCurve"
    NEAR_DEGENERACY = "NearDegeneracy"
    AT_SENSOR = "AtSensor"


@dataclass(frozen=True)
class XRegion:
    kind: XRegionKind
    index: int | None = None

    @property
    def name(self) -> str:
        if self.kind is XRegionKind.UTILDE_PRE:
            return f"{self.kind.value}{self.index}"
        return self.kind.value


_CURVE_SUBS = {"EllipseArcBoundary", "TangencyPoint"}


def classify_x(cfg: SensorConfig, x, tol: float | None = None) -> XRegion:
    """Which region of the source plane x belongs to, judged through tau2(x)."""
    if tol is None:
        tol = default_tol(cfg)
    if min(math.dist(x, m) for m in cfg.sensors) <= 1e-9 * cfg.scale:
        return XRegion(XRegionKind.AT_SENSOR)
    tau = tau2(cfg, x)
    label = classify_tau(cfg, tau, tol)
    if label.kind is RegionKind.DOUBLE:
        return XRegion(XRegionKind.UTILDE_PRE, label.index)
    if label.sub == "EMinusInterior":
        return XRegion(XRegionKind.E_MINUS_PRE)
    if label.sub in _CURVE_SUBS:
        return XRegion(XRegionKind.NEAR_CURVE)
    if label.kind is RegionKind.NOT_IN_IMAGE and label.sub in ("EplusCminus", "OutsideP2") \
            and cfg.is_general:
        # a forward image can only land here through rounding: report the closer locus
        facet_gap = abs(build_p2(cfg).max_signed_distance(tau))
        curve_gap = abs(coeff_a(cfg, tau)) / max(_grad_a_norm(user_frame(cfg), *tau), 1e-300)
        if curve_gap < facet_gap:
            return XRegion(XRegionKind.NEAR_CURVE)
    return XRegion(XRegionKind.NEAR_DEGENERACY)


# --- implicit equation ------------------------------------------------------


def monomial_exponents(degree: int = QUINTIC_DEGREE) -> list[tuple[int, int]]:
    """Graded lexicographic order: 1, x, y, x^2, xy, y^2, ..., y^5."""
    return [(d - j, j) for d in range(degree + 1) for j in range(d + 1)]


def _design(points: np.ndarray) -> np.ndarray:
    exps = monomial_exponents()
    return np.stack([points[:, 0] ** i * points[:, 1] ** j for i, j in exps], axis=1)


@dataclass(frozen=True)
class QuinticFit:
    """F(x, y) = sum c_k * X^i Y^j with X = (x - cx) / s, Y = (y - cy) / s."""

    coefficients: tuple[float, ...]
    center: Point2
    unit: float
    holdout_residual: float
    fit_residual: float
    singular_gap: float
    n_fit: int
    n_holdout: int

    def evaluate(self, x) -> float:
        p = (np.atleast_2d(np.asarray(x, dtype=float)) - np.asarray(self.center)) / self.unit
        return float((_design(p) @ np.asarray(self.coefficients))[0])

    def top_degree_weight(self) -> float:
        coef = np.asarray(self.coefficients)
        top = [k for k, (i, j) in enumerate(monomial_exponents()) if i + j == QUINTIC_DEGREE]
        return float(np.linalg.norm(coef[top]) / np.linalg.norm(coef))


def _relative_residuals(design: np.ndarray, coef: np.ndarray) -> np.ndarray:
    return np.abs(design @ coef) / np.linalg.norm(design, axis=1)


def implicitize_quintic(cfg: SensorConfig, samples, max_radius: float = 20.0) -> QuinticFit:
    """Least-squares null vector of the degree-5 design matrix.

    Coordinates are centred on the sensors' centroid and measured in units of
    the array scale; samples farther than ``max_radius`` units are ignored.
    Every third sample is held out, and residuals are |F| divided by the
    norm of the monomial vector.
    """
    center = np.asarray(cfg.sensors).mean(axis=0)
    unit = cfg.scale
    pts = np.array([s.x for s in samples], dtype=float)
    branches = {s.branch for s in samples}
    norm_pts = (pts - center) / unit
    keep = np.hypot(norm_pts[:, 0], norm_pts[:, 1]) <= max_radius
    norm_pts = norm_pts[keep]
    if len(norm_pts) < MIN_FIT_SAMPLES:
        raise ValueError(f"need at least {MIN_FIT_SAMPLES} samples, got {len(norm_pts)}")
    if len(branches) < 3:
        raise ValueError("samples must cover all three arcs")

    holdout = np.arange(len(norm_pts)) % 3 == 2
    design_fit = _design(norm_pts[~holdout])
    design_fit /= np.linalg.norm(design_fit, axis=1)[:, None]
    _, sv, vt = np.linalg.svd(design_fit, full_matrices=False)
    gap = float(sv[-2] - sv[-1])
    if gap < 1e3 * np.finfo(float).eps * sv[0]:
        raise IllConditioned("null direction of the design matrix is not isolated")
    coef = vt[-1]
    # fix the sign so that F(m0) > 0
    if (_design(((np.asarray(cfg.m0) - center) / unit)[None, :]) @ coef)[0] < 0:
        coef = -coef

    return QuinticFit(
        coefficients=tuple(float(c) for c in coef),
        center=Point2(float(center[0]), float(center[1])),
        unit=float(unit),
        holdout_residual=float(np.max(_relative_residuals(_design(norm_pts[holdout]), coef))),
        fit_residual=float(np.max(_relative_residuals(_design(norm_pts[~holdout]), coef))),
        singular_gap=gap,
        n_fit=int(np.count_nonzero(~holdout)),
        n_holdout=int(np.count_nonzero(holdout)),
    )
