"""Three-receiver layouts: validation, orientation normalization, line splits."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

from .errors import DegenerateConfigError
from .exterior_algebra import EucVec2, wedge2

DEFAULT_REL_TOL = 1e-9


class Point2(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class General:
    name = "general"


@dataclass(frozen=True)
class Collinear:
    """Sensors on one line with d20 = k * d10; `between` is the interior sensor."""

    k: float
    between: int
    name = "collinear"


@dataclass(frozen=True)
class SensorConfig:
    """An immutable, validated sensor triple.

    For non-collinear arrays with a clockwise triple (m0, m1, m2) the roles
    of m1 and m2 are exchanged internally so that wedge2(d10, d20) > 0.
    ``m0, m1, m2`` and the derived vectors are the internal, normalized ones;
    ``swapped`` records the exchange and every public function of the package
    takes and returns tau pairs, sensor indices and labels in the caller's
    original order.
    """

    m0: Point2
    m1: Point2
    m2: Point2
    d10_vec: EucVec2
    d20_vec: EucVec2
    d21_vec: EucVec2
    d10: float
    d20: float
    d21: float
    orientation: int
    swapped: bool
    geometry_class: General | Collinear
    rel_tol: float = DEFAULT_REL_TOL
    scale: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "scale", max(self.d10, self.d20, self.d21))

    @property
    def is_general(self) -> bool:
        return isinstance(self.geometry_class, General)

    @property
    def wedge(self) -> float:
        """wedge2(d10, d20) of the internal frame (positive for General arrays)."""
        return wedge2(self.d10_vec, self.d20_vec)

    @property
    def sensors(self) -> tuple[Point2, Point2, Point2]:
        return (self.m0, self.m1, self.m2)

    @property
    def user_sensors(self) -> tuple[Point2, Point2, Point2]:
        if self.swapped:
            return (self.m0, self.m2, self.m1)
        return (self.m0, self.m1, self.m2)

    def to_internal(self, tau) -> tuple[float, float]:
        t1, t2 = float(tau[0]), float(tau[1])
        return (t2, t1) if self.swapped else (t1, t2)

    def to_user(self, tau) -> tuple[float, float]:
        return self.to_internal(tau)

    def user_index(self, i: int) -> int:
        """Map an internal sensor index to the caller's index (and back)."""
        if self.swapped and i in (1, 2):
            return 3 - i
        return i


def _as_point(p) -> Point2:
    x, y = float(p[0]), float(p[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise DegenerateConfigError(f"non-finite sensor coordinate {p!r}")
    return Point2(x, y)


def _sub(a, b) -> EucVec2:
    return EucVec2(a[0] - b[0], a[1] - b[1])


def build_config(m0, m1, m2, rel_tol: float = DEFAULT_REL_TOL) -> SensorConfig:
    """Validate a sensor triple and derive the quantities every module needs."""
    if not (0.0 < rel_tol <= 1e-3):
        raise ValueError(f"rel_tol must lie in (0, 1e-3], got {rel_tol}")
    p0, p1, p2 = _as_point(m0), _as_point(m1), _as_point(m2)
    dists = (math.dist(p1, p0), math.dist(p2, p0), math.dist(p2, p1))
    if min(dists) <= rel_tol * max(dists):
        raise DegenerateConfigError("two sensors coincide")

    w = wedge2(_sub(p1, p0), _sub(p2, p0))
    collinear = abs(w) <= rel_tol * dists[0] * dists[1]
    orientation = 0 if collinear else (1 if w > 0 else -1)
    swapped = orientation < 0
    if swapped:
        p1, p2 = p2, p1

    d10v, d20v, d21v = _sub(p1, p0), _sub(p2, p0), _sub(p2, p1)
    d10, d20, d21 = math.hypot(*d10v), math.hypot(*d20v), math.hypot(*d21v)

    if collinear:
        k = (d20v[0] * d10v[0] + d20v[1] * d10v[1]) / (d10 * d10)
        if k < 0:
            between = 0
        elif k < 1:
            between = 2
        else:
            between = 1
        gclass: General | Collinear = Collinear(k=k, between=between)
    else:
        gclass = General()

    return SensorConfig(
        m0=p0, m1=p1, m2=p2,
        d10_vec=d10v, d20_vec=d20v, d21_vec=d21v,
        d10=d10, d20=d20, d21=d21,
        orientation=orientation, swapped=swapped,
        geometry_class=gclass, rel_tol=rel_tol,
    )


def load_config(path: str | Path) -> SensorConfig:
    """Read the JSON document ``{"m0":[x,y],"m1":[x,y],"m2":[x,y],"rel_tol":1e-9}``."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise ValueError("config must be a JSON object")
    pts = []
    for key in ("m0", "m1", "m2"):
        p = doc.get(key)
        if not isinstance(p, list) or len(p) != 2:
            raise ValueError(f"config field {key!r} must be a list [x, y]")
        pts.append(p)
    rel_tol = float(doc.get("rel_tol", DEFAULT_REL_TOL))
    return build_config(*pts, rel_tol=rel_tol)


def config_to_json(cfg: SensorConfig) -> str:
    m0, m1, m2 = cfg.user_sensors
    doc = {"m0": list(m0), "m1": list(m1), "m2": list(m2), "rel_tol": cfg.rel_tol}
    return json.dumps(doc)


# --- line splits -----------------------------------------------------------


class HalfLine(NamedTuple):
    base: Point2
    direction: EucVec2


class Segment(NamedTuple):
    start: Point2
    end: Point2


@dataclass(frozen=True)
class LineSplit:
    """Split of the line through the two sensors other than m_index.

    With i < j the indices of those sensors, ``plus`` starts at m_i and
    points away from m_j, ``minus`` starts at m_j and points away from m_i,
    and ``zero`` is the closed segment between them.
    """

    index: int
    zero: Segment
    plus: HalfLine
    minus: HalfLine


@dataclass(frozen=True)
class CollinearSplit:
    """Shortest segment holding all three sensors, and its two complementary half-lines."""

    zero: Segment
    complement: tuple[HalfLine, HalfLine]


def _unit(v) -> EucVec2:
    n = math.hypot(v[0], v[1])
    return EucVec2(v[0] / n, v[1] / n)


def line_splits(cfg: SensorConfig) -> tuple[LineSplit, LineSplit, LineSplit]:
    """The three line splits, indexed in the caller's sensor order."""
    pts = cfg.user_sensors
    out = []
    for k, (i, j) in enumerate(((1, 2), (0, 2), (0, 1))):
        mi, mj = pts[i], pts[j]
        u = _unit(_sub(mj, mi))
        out.append(
            LineSplit(
                index=k,
                zero=Segment(mi, mj),
                plus=HalfLine(mi, EucVec2(-u[0], -u[1])),
                minus=HalfLine(mj, u),
            )
        )
    return tuple(out)


def collinear_split(cfg: SensorConfig) -> CollinearSplit:
    pts = cfg.user_sensors
    u = _unit(cfg.d10_vec)
    s = [(p[0] - pts[0][0]) * u[0] + (p[1] - pts[0][1]) * u[1] for p in pts]
    lo = pts[min(range(3), key=s.__getitem__)]
    hi = pts[max(range(3), key=s.__getitem__)]
    return CollinearSplit(
        zero=Segment(lo, hi),
        complement=(HalfLine(lo, EucVec2(-u[0], -u[1])), HalfLine(hi, u)),
    )


def _dist_to_segment(x, seg: Segment) -> float:
    a, b = seg
    d = _sub(b, a)
    t = ((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1]) / (d[0] ** 2 + d[1] ** 2)
    t = min(1.0, max(0.0, t))
    return math.hypot(x[0] - a[0] - t * d[0], x[1] - a[1] - t * d[1])


def _dist_to_halfline(x, hl: HalfLine) -> float:
    (bx, by), (ux, uy) = hl
    t = max(0.0, (x[0] - bx) * ux + (x[1] - by) * uy)
    return math.hypot(x[0] - bx - t * ux, x[1] - by - t * uy)


def halfline_membership(cfg: SensorConfig, x, band: float = 0.0) -> set[tuple[int, str]]:
    """All split parts (line index, '+', '-' or '0') within distance ``band`` of x."""
    found = set()
    for split in line_splits(cfg):
        if _dist_to_halfline(x, split.plus) <= band:
            found.add((split.index, "+"))
        if _dist_to_halfline(x, split.minus) <= band:
            found.add((split.index, "-"))
        if _dist_to_segment(x, split.zero) <= band:
            found.add((split.index, "0"))
    return found


def collinear_membership(cfg: SensorConfig, x, band: float = 0.0) -> set[str]:
    """Subset of {'r0', 'rc'} within distance ``band`` of x for a collinear array."""
    split = collinear_split(cfg)
    found = set()
    if _dist_to_segment(x, split.zero) <= band:
        found.add("r0")
    if any(_dist_to_halfline(x, hl) <= band for hl in split.complement):
        found.add("rc")
    return found
