"""Loci of the tau-plane and the fiber-cardinality classification of a measurement.

Everything in this module works in the caller's sensor order. The
coefficients a, b_bar and c are unchanged by exchanging m1 with m2 (together
with tau1 and tau2), and b uses |wedge2(d10, d20)|, which equals the wedge of
the positively oriented internal frame.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import AmbiguousComponent, GeometryClassError
from .exterior_algebra import EucVec2, wedge2
from .sensor_config import Collinear, SensorConfig
from .tdoa_forward import TauPair

SNAP_RTOL = 1e-9
U_SEGMENT_STEPS = 256


# --- user frame helpers ----------------------------------------------------


class UserFrame(NamedTuple):
    d10v: EucVec2
    d20v: EucVec2
    d21v: EucVec2
    d10: float
    d20: float
    d21: float
    abs_wedge: float


def user_frame(cfg: SensorConfig) -> UserFrame:
    m0, m1, m2 = cfg.user_sensors
    d10v = EucVec2(m1[0] - m0[0], m1[1] - m0[1])
    d20v = EucVec2(m2[0] - m0[0], m2[1] - m0[1])
    d21v = EucVec2(m2[0] - m1[0], m2[1] - m1[1])
    d10, d20 = (cfg.d20, cfg.d10) if cfg.swapped else (cfg.d10, cfg.d20)
    return UserFrame(d10v, d20v, d21v, d10, d20, cfg.d21, abs(wedge2(d10v, d20v)))


def default_tol(cfg: SensorConfig) -> float:
    return SNAP_RTOL * (cfg.d10 + cfg.d20)


def _require_general(cfg: SensorConfig) -> None:
    if not cfg.is_general:
        raise GeometryClassError("operation requires a non-collinear array")


# --- polygon P2 -------------------------------------------------------------


class Facet(NamedTuple):
    """Supporting line alpha*tau1 + beta*tau2 = gamma; P2 lies on the <= side."""

    label: str
    alpha: float
    beta: float
    gamma: float

    def signed_distance(self, tau) -> float:
        return (self.alpha * tau[0] + self.beta * tau[1] - self.gamma) / math.hypot(
            self.alpha, self.beta
        )


@dataclass(frozen=True)
class PolygonP2:
    vertices: tuple[TauPair, ...]
    facets: tuple[Facet, ...]

    def max_signed_distance(self, tau) -> float:
        return max(f.signed_distance(tau) for f in self.facets)

    def contains(self, tau, tol: float = 0.0) -> bool:
        return self.max_signed_distance(tau) <= tol


def _facet_table(fr: UserFrame) -> dict[str, Facet]:
    return {
        "F0+": Facet("F0+", -1.0, 1.0, fr.d21),
        "F0-": Facet("F0-", 1.0, -1.0, fr.d21),
        "F1+": Facet("F1+", 0.0, 1.0, fr.d20),
        "F1-": Facet("F1-", 0.0, -1.0, fr.d20),
        "F2+": Facet("F2+", 1.0, 0.0, fr.d10),
        "F2-": Facet("F2-", -1.0, 0.0, fr.d10),
    }


def _meet(f: Facet, g: Facet) -> TauPair:
    det = f.alpha * g.beta - f.beta * g.alpha
    return TauPair(
        (f.gamma * g.beta - f.beta * g.gamma) / det,
        (f.alpha * g.gamma - f.gamma * g.alpha) / det,
    )


def build_p2(cfg: SensorConfig) -> PolygonP2:
    """Feasibility polygon: hexagon for General arrays, quadrilateral when collinear.

    Vertices run counter-clockwise starting at R0 = (d10, d20); facet j joins
    vertex j to vertex j + 1.
    """
    fr = user_frame(cfg)
    table = _facet_table(fr)
    d10, d20, d21 = fr.d10, fr.d20, fr.d21
    if cfg.is_general:
        order = ("F1+", "F0+", "F2-", "F1-", "F0-", "F2+")
        vertices = (
            TauPair(d10, d20),
            TauPair(d20 - d21, d20),
            TauPair(-d10, d21 - d10),
            TauPair(-d10, -d20),
            TauPair(d21 - d20, -d20),
            TauPair(d10, d10 - d21),
        )
        return PolygonP2(vertices, tuple(table[name] for name in order))

    # collinear: the pair of inequalities of the interior sensor's line is redundant
    between = cfg.geometry_class.between
    order = {
        0: ("F1+", "F2-", "F1-", "F2+"),
        1: ("F0+", "F2-", "F0-", "F2+"),
        2: ("F1+", "F0+", "F1-", "F0-"),
    }[between]
    facets = tuple(table[name] for name in order)
    vertices = tuple(_meet(facets[j - 1], facets[j]) for j in range(len(facets)))
    return PolygonP2(vertices, facets)


# --- distinguished points -----------------------------------------------


@dataclass(frozen=True)
class DistinguishedPoints:
    R0: TauPair
    R1: TauPair
    R2: TauPair
    Rstar: TauPair
    R0_1: TauPair
    Rstar_1: TauPair
    T0p: TauPair
    T0m: TauPair
    T1p: TauPair
    T1m: TauPair
    T2p: TauPair
    T2m: TauPair

    def vertices_r(self) -> tuple[TauPair, TauPair, TauPair]:
        return (self.R0, self.R1, self.R2)

    def tangency(self) -> dict[str, TauPair]:
        return {
            "T0p": self.T0p, "T0m": self.T0m,
            "T1p": self.T1p, "T1m": self.T1m,
            "T2p": self.T2p, "T2m": self.T2m,
        }

    def as_dict(self) -> dict[str, TauPair]:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


def _unit(v) -> tuple[float, float]:
    n = math.hypot(v[0], v[1])
    return (v[0] / n, v[1] / n)


def tangency_points(cfg: SensorConfig) -> DistinguishedPoints:
    """The eleven distinguished points (R0 listed once) plus Rstar_1."""
    _require_general(cfg)
    fr = user_frame(cfg)

    def t_plus(direction) -> TauPair:
        u = _unit(direction)
        return TauPair(
            fr.d10v[0] * u[0] + fr.d10v[1] * u[1],
            fr.d20v[0] * u[0] + fr.d20v[1] * u[1],
        )

    t0, t1, t2 = t_plus(fr.d21v), t_plus(fr.d20v), t_plus(fr.d10v)
    neg = lambda t: TauPair(-t[0], -t[1])  # noqa: E731
    return DistinguishedPoints(
        R0=TauPair(fr.d10, fr.d20),
        R1=TauPair(-fr.d10, fr.d21 - fr.d10),
        R2=TauPair(fr.d21 - fr.d20, -fr.d20),
        Rstar=TauPair(-fr.d10, fr.d20),
        R0_1=TauPair(-fr.d10, -fr.d20),
        Rstar_1=TauPair(fr.d10, -fr.d20),
        T0p=t0, T0m=neg(t0),
        T1p=t1, T1m=neg(t1),
        T2p=t2, T2m=neg(t2),
    )


# --- coefficients ------------------------------------------------------------


def _abc_parts(fr: UserFrame, t1, t2):
    qx = t2 * fr.d10v[0] - t1 * fr.d20v[0]
    qy = t2 * fr.d10v[1] - t1 * fr.d20v[1]
    n10 = fr.d10 * fr.d10 - t1 * t1
    n20 = fr.d20 * fr.d20 - t2 * t2
    px = n10 * fr.d20v[0] - n20 * fr.d10v[0]
    py = n10 * fr.d20v[1] - n20 * fr.d10v[1]
    return qx, qy, px, py


def coeff_a(cfg: SensorConfig, tau) -> float:
    _require_general(cfg)
    fr = user_frame(cfg)
    qx, qy, _, _ = _abc_parts(fr, float(tau[0]), float(tau[1]))
    return qx * qx + qy * qy - fr.abs_wedge**2


def coeff_b_cubic(cfg: SensorConfig, tau) -> float:
    _require_general(cfg)
    fr = user_frame(cfg)
    qx, qy, px, py = _abc_parts(fr, float(tau[0]), float(tau[1]))
    return -(qx * px + qy * py)


def coeff_b(cfg: SensorConfig, tau) -> float:
    _require_general(cfg)
    return coeff_b_cubic(cfg, tau) / (2.0 * user_frame(cfg).abs_wedge)


def coeff_c(cfg: SensorConfig, tau) -> float:
    _require_general(cfg)
    fr = user_frame(cfg)
    _, _, px, py = _abc_parts(fr, float(tau[0]), float(tau[1]))
    return (px * px + py * py) / (4.0 * fr.abs_wedge**2)


def discriminant(cfg: SensorConfig, tau) -> float:
    """Reduced discriminant b^2 - a*c of a*lam^2 + 2*b*lam + c."""
    a, b, c = coefficients(cfg, tau)
    return b * b - a * c


def coefficients(cfg: SensorConfig, tau) -> tuple[float, float, float]:
    """(a, b, c) in one pass."""
    _require_general(cfg)
    fr = user_frame(cfg)
    qx, qy, px, py = _abc_parts(fr, float(tau[0]), float(tau[1]))
    w = fr.abs_wedge
    a = qx * qx + qy * qy - w * w
    b = -(qx * px + qy * py) / (2.0 * w)
    c = (px * px + py * py) / (4.0 * w * w)
    return a, b, c


def _grad_a_norm(fr: UserFrame, t1: float, t2: float) -> float:
    qx = t2 * fr.d10v[0] - t1 * fr.d20v[0]
    qy = t2 * fr.d10v[1] - t1 * fr.d20v[1]
    g1 = -2.0 * (qx * fr.d20v[0] + qy * fr.d20v[1])
    g2 = 2.0 * (qx * fr.d10v[0] + qy * fr.d10v[1])
    return math.hypot(g1, g2)


def _a_bbar_many(fr: UserFrame, t1: np.ndarray, t2: np.ndarray):
    qx, qy, px, py = _abc_parts(fr, t1, t2)
    return qx * qx + qy * qy - fr.abs_wedge**2, -(qx * px + qy * py)


# --- region labels ----------------------------------------------------------


class RegionKind(enum.Enum):
    UNIQUE = "unique"
    DOUBLE = "double"
    INFINITE = "infinite"
    NOT_IN_IMAGE = "not_in_image"


_SUB_NAMES = {
    "EMinusInterior": "e_minus_interior",
    "EllipseArcBoundary": "ellipse_arc_boundary",
    "FacetBoundary": "facet_boundary",
    "VertexR": "vertex_r",
    "OutsideP2": "outside_p2",
    "EplusCminus": "eplus_cminus",
    "TangencyPoint": "tangency_point",
    "ExcludedVertex": "excluded_vertex",
    "DependentLine": "dependent_line",
    "OutsideTriangle": "outside_triangle",
}


@dataclass(frozen=True)
class RegionLabel:
    """Classification of a tau point.

    ``sub`` refines UNIQUE and NOT_IN_IMAGE verdicts; ``index`` is the sensor
    index of a VertexR verdict or the component index of a DOUBLE verdict.
    """

    kind: RegionKind
    sub: str | None = None
    index: int | None = None

    def fiber_count(self) -> float:
        return {
            RegionKind.UNIQUE: 1,
            RegionKind.DOUBLE: 2,
            RegionKind.INFINITE: math.inf,
            RegionKind.NOT_IN_IMAGE: 0,
        }[self.kind]

    @property
    def in_image(self) -> bool:
        return self.kind is not RegionKind.NOT_IN_IMAGE

    @property
    def name(self) -> str:
        """Stable snake_case name, e.g. ``unique_vertex_r1`` or ``double_u0``."""
        if self.kind is RegionKind.INFINITE:
            return "infinite"
        if self.kind is RegionKind.DOUBLE:
            return f"double_u{self.index}"
        sub = _SUB_NAMES[self.sub]
        if self.sub == "VertexR":
            sub += str(self.index)
        return f"{self.kind.value}_{sub}"


def _unique(sub: str, index: int | None = None) -> RegionLabel:
    return RegionLabel(RegionKind.UNIQUE, sub, index)


def _not_in_image(sub: str) -> RegionLabel:
    return RegionLabel(RegionKind.NOT_IN_IMAGE, sub)


def _u_segment_violations(cfg: SensorConfig, tau) -> list[int]:
    fr = user_frame(cfg)
    pts = tangency_points(cfg)
    s = np.arange(U_SEGMENT_STEPS) / U_SEGMENT_STEPS  # endpoint R^i excluded: b_bar(R0) = 0
    t1, t2 = float(tau[0]), float(tau[1])
    counts = []
    for r in pts.vertices_r():
        a, bbar = _a_bbar_many(fr, t1 + s * (r[0] - t1), t2 + s * (r[1] - t2))
        counts.append(int(np.count_nonzero(a <= 0.0) + np.count_nonzero(bbar <= 0.0)))
    return counts


def label_U_component(cfg: SensorConfig, tau) -> int:
    """Index i of the double-cover component U_i containing tau.

    The segment from tau to R^i must stay where a > 0 and b_bar > 0.
    """
    _require_general(cfg)
    counts = _u_segment_violations(cfg, tau)
    passing = [i for i, n in enumerate(counts) if n == 0]
    if len(passing) != 1:
        raise AmbiguousComponent(f"tau = {tuple(tau)} passes the segment test for {passing}")
    return passing[0]


def classify_tau(cfg: SensorConfig, tau, tol: float | None = None) -> RegionLabel:
    """Region of the tau-plane containing tau, with its fiber cardinality."""
    if tol is None:
        tol = default_tol(cfg)
    tau = (float(tau[0]), float(tau[1]))
    poly = build_p2(cfg)
    sdist = poly.max_signed_distance(tau)
    if sdist > tol:
        return _not_in_image("OutsideP2")
    if isinstance(cfg.geometry_class, Collinear):
        return _classify_collinear(cfg, tau, tol, sdist)

    pts = tangency_points(cfg)
    if math.dist(tau, pts.R0) <= tol:
        return _unique("VertexR", 0)
    if math.dist(tau, pts.R0_1) <= tol:
        return _not_in_image("ExcludedVertex")
    if min(math.dist(tau, t) for t in pts.tangency().values()) <= tol:
        return _not_in_image("TangencyPoint")

    fr = user_frame(cfg)
    a, bbar = coeff_a(cfg, tau), coeff_b_cubic(cfg, tau)
    if abs(a) <= tol * _grad_a_norm(fr, *tau):
        return _unique("EllipseArcBoundary") if bbar > 0 else _not_in_image("EplusCminus")
    if a < 0:
        return _unique("EMinusInterior")
    if bbar <= 0:
        return _not_in_image("EplusCminus")
    if sdist >= -tol:
        for i in (1, 2):
            if math.dist(tau, pts.vertices_r()[i]) <= tol:
                return _unique("VertexR", i)
        return _unique("FacetBoundary")
    counts = _u_segment_violations(cfg, tau)
    return RegionLabel(RegionKind.DOUBLE, index=int(np.argmin(counts)))


def collinear_vertices(cfg: SensorConfig) -> tuple[TauPair, TauPair, TauPair]:
    """Vertices of the image triangle: (d10, sgn(k) d20), its negative, and R^i."""
    gc = cfg.geometry_class
    if not isinstance(gc, Collinear):
        raise GeometryClassError("operation requires a collinear array")
    fr = user_frame(cfg)
    vplus = TauPair(fr.d10, gc.k * fr.d10)
    r = {
        0: TauPair(fr.d10, fr.d20),
        1: TauPair(-fr.d10, fr.d21 - fr.d10),
        2: TauPair(fr.d21 - fr.d20, -fr.d20),
    }[gc.between]
    return vplus, TauPair(-vplus[0], -vplus[1]), r


def collinear_cone_ratio(cfg: SensorConfig, tau) -> float:
    """(k tau1^2 - tau2^2 + d10^2 (k^2 - k)) / (2 (tau2 - k tau1)); positive on the admissible side."""
    k = cfg.geometry_class.k
    t1, t2 = float(tau[0]), float(tau[1])
    d10 = user_frame(cfg).d10
    return (k * t1 * t1 - t2 * t2 + d10 * d10 * (k * k - k)) / (2.0 * (t2 - k * t1))


def _classify_collinear(cfg: SensorConfig, tau, tol: float, sdist: float) -> RegionLabel:
    gc = cfg.geometry_class
    k = gc.k
    vplus, vminus, r = collinear_vertices(cfg)
    if math.dist(tau, vplus) <= tol or math.dist(tau, vminus) <= tol:
        return RegionLabel(RegionKind.INFINITE)
    off_line = tau[1] - k * tau[0]
    if abs(off_line) <= tol * math.hypot(1.0, k):
        return _not_in_image("DependentLine")
    # the numerator of the cone ratio keeps the sign of k^2 - k on P2 (it only
    # vanishes at the corners), so the ratio's sign reduces to this product
    if off_line * (k * k - k) < 0:
        return _not_in_image("OutsideTriangle")
    if sdist >= -tol:
        if math.dist(tau, r) <= tol:
            return _unique("VertexR", gc.between)
        return _unique("FacetBoundary")
    return RegionLabel(RegionKind.DOUBLE, index=gc.between)
