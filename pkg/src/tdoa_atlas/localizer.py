"""Closed-form inversion of the TDOA map, plus a brute-force numerical oracle.

A source x and its range difference tau = -d0(x) form the point X = (x, tau)
of Minkowski space. X lies on the past light cone of m0 and on two planes
fixed by the measurement; the planes meet in a line L0 + lam*v, and the
admissible sources come from the roots of a*lam^2 + 2*b*lam + c = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import exterior_algebra as ea
from .errors import CoincidentPlanes, DependentPlanes, NoRealRoots
from .exterior_algebra import E3, EucVec2, MinkVec3
from .sensor_config import Collinear, HalfLine, Point2, SensorConfig
from .tau_domain import (
    RegionKind,
    _grad_a_norm,
    classify_tau,
    coefficients,
    collinear_vertices,
    default_tol,
    user_frame,
)
from .tdoa_forward import tau2_many

LAMBDA_SNAP_RTOL = 1e-9
MERGE_RTOL = 1e-7
DISCRIMINANT_SNAP = 64 * np.finfo(float).eps
_ALPHAS = 0.5 ** np.arange(40)


class Line3(NamedTuple):
    """Points base + lam * direction, in absolute (x, y, tau) coordinates."""

    base: MinkVec3
    direction: MinkVec3


@dataclass(frozen=True)
class QuadraticCase:
    """a*lam^2 + 2*b*lam + c = 0 with its real roots as (lam, multiplicity), ascending."""

    a: float
    b: float
    c: float
    delta: float
    roots: tuple[tuple[float, int], ...]
    linear: bool = False


@dataclass(frozen=True)
class FiberResult:
    """Preimage of one measurement: finitely many points or a half-line."""

    points: tuple[Point2, ...] = ()
    multiplicities: tuple[int, ...] = ()
    half_line: HalfLine | None = None
    lifted: tuple[MinkVec3, ...] = field(default=(), compare=False)

    @property
    def count(self) -> float:
        return math.inf if self.half_line is not None else len(self.points)

    def contains(self, x, tol: float) -> bool:
        if self.half_line is not None:
            (bx, by), (ux, uy) = self.half_line
            s = max(0.0, (x[0] - bx) * ux + (x[1] - by) * uy)
            return math.hypot(x[0] - bx - s * ux, x[1] - by - s * uy) <= tol
        return any(math.dist(p, x) <= tol for p in self.points)


def _vec3(v2, t: float = 0.0) -> MinkVec3:
    return MinkVec3(float(v2[0]), float(v2[1]), float(t))


def _scaled(v, s: float) -> MinkVec3:
    return MinkVec3(s * v[0], s * v[1], s * v[2])


def _combo(s, u, r, w) -> MinkVec3:
    return MinkVec3(s * u[0] + r * w[0], s * u[1] + r * w[1], s * u[2] + r * w[2])


def _dependent_line_check(cfg: SensorConfig, tau, tol: float) -> None:
    k = cfg.geometry_class.k
    if abs(tau[1] - k * tau[0]) <= tol * math.hypot(1.0, k):
        if min(abs(tau[0] - cfg.d10), abs(tau[0] + cfg.d10)) <= tol:
            raise CoincidentPlanes("the two planes coincide")
        raise DependentPlanes("the two planes are parallel and distinct")


def l21_line(cfg: SensorConfig, tau, tol: float | None = None) -> Line3:
    """Intersection line of the planes <D_i0, D_0(X)> = |D_i0|^2 / 2, i = 1, 2."""
    if tol is None:
        tol = default_tol(cfg)
    m0 = cfg.m0
    if isinstance(cfg.geometry_class, Collinear):
        tau = (float(tau[0]), float(tau[1]))
        _dependent_line_check(cfg, tau, tol)
        k = cfg.geometry_class.k
        d10_3 = _vec3(cfg.d10_vec)
        D10, D20 = _vec3(cfg.d10_vec, tau[0]), _vec3(cfg.d20_vec, tau[1])
        n10, n20 = ea.mink_norm2(D10), ea.mink_norm2(D20)
        v = ea.star_wedge(d10_3, E3)
        rel = ea.star_wedge(v, _combo(n20, D10, -n10, D20))
        rel = _scaled(rel, -1.0 / (2.0 * cfg.d10**2 * (k * tau[0] - tau[1])))
        return Line3(MinkVec3(m0[0] + rel[0], m0[1] + rel[1], rel[2]), v)

    t1, t2 = cfg.to_internal(tau)
    D10, D20 = _vec3(cfg.d10_vec, t1), _vec3(cfg.d20_vec, t2)
    n10, n20 = ea.mink_norm2(D10), ea.mink_norm2(D20)
    v = ea.star_wedge(D10, D20)
    star_omega = ea.hodge_star(ea.wedge3(D10, D20, E3))
    rel = ea.star_wedge(_combo(n10, D20, -n20, D10), E3)
    rel = _scaled(rel, 1.0 / (2.0 * star_omega))
    return Line3(MinkVec3(m0[0] + rel[0], m0[1] + rel[1], rel[2]), v)


def _quadratic_roots(a: float, b: float, c: float, delta: float):
    snap = DISCRIMINANT_SNAP * max(b * b, abs(a * c))
    if delta < -snap:
        raise NoRealRoots(f"discriminant {delta!r} is negative")
    if abs(delta) <= snap:
        return ((-b / a, 2),)
    q = -(b + math.copysign(math.sqrt(delta), b))
    return tuple(sorted(((q / a, 1), (c / q, 1))))


def solve_lambda(cfg: SensorConfig, tau, tol: float | None = None) -> QuadraticCase:
    """Coefficients and real roots of the quadratic in the line parameter."""
    if tol is None:
        tol = default_tol(cfg)
    tau = (float(tau[0]), float(tau[1]))
    if isinstance(cfg.geometry_class, Collinear):
        _dependent_line_check(cfg, tau, tol)
        k = cfg.geometry_class.k
        n10 = cfg.d10**2 - tau[0] ** 2
        n20 = cfg.d20**2 - tau[1] ** 2
        n21 = cfg.d21**2 - (tau[1] - tau[0]) ** 2
        a = cfg.d10**2
        c = -n10 * n20 * n21 / (4.0 * cfg.d10**2 * (k * tau[0] - tau[1]) ** 2)
        delta = -a * c
        return QuadraticCase(a, 0.0, c, delta, _quadratic_roots(a, 0.0, c, delta))

    a, b, c = coefficients(cfg, tau)
    delta = b * b - a * c
    if abs(a) <= tol * _grad_a_norm(user_frame(cfg), *tau):
        roots = ((-c / (2.0 * b), 1),) if b != 0.0 else ()
        return QuadraticCase(a, b, c, delta, roots, linear=True)
    return QuadraticCase(a, b, c, delta, _quadratic_roots(a, b, c, delta))


def _merge(points: list[tuple[np.ndarray, MinkVec3, int]], tol: float):
    merged: list[list] = []
    for xy, lifted, mult in points:
        for cluster in merged:
            if np.linalg.norm(cluster[0] - xy) <= tol:
                cluster[0] = 0.5 * (cluster[0] + xy)
                cluster[2] += mult
                break
        else:
            merged.append([xy, lifted, mult])
    merged.sort(key=lambda p: (p[0][0], p[0][1]))
    return merged


def _half_line(cfg: SensorConfig, positive_vertex: bool) -> HalfLine:
    u = np.asarray(cfg.d10_vec) / cfg.d10
    direction = -u if positive_vertex else u
    base = max(cfg.user_sensors, key=lambda m: float(np.dot(m, direction)))
    return HalfLine(Point2(*base), EucVec2(float(direction[0]), float(direction[1])))


def locate(cfg: SensorConfig, tau, tol: float | None = None) -> FiberResult:
    """All sources x with tau2(x) = tau.

    Roots closer than 1e-7 x scale in the source plane are reported once,
    with multiplicity 2.
    """
    if tol is None:
        tol = default_tol(cfg)
    tau = (float(tau[0]), float(tau[1]))
    label = classify_tau(cfg, tau, tol)
    if not label.in_image:
        return FiberResult()
    if label.kind is RegionKind.INFINITE:
        vplus, _, _ = collinear_vertices(cfg)
        return FiberResult(half_line=_half_line(cfg, math.dist(tau, vplus) <= tol))
    if cfg.is_general and label.sub == "VertexR" and label.index == 0:
        m0 = cfg.m0
        return FiberResult((m0,), (2,), lifted=(MinkVec3(m0[0], m0[1], 0.0),))

    line = l21_line(cfg, tau, tol)
    quad = solve_lambda(cfg, tau, tol)
    snap = LAMBDA_SNAP_RTOL * cfg.scale
    candidates = []
    base = np.asarray(line.base)
    direction = np.asarray(line.direction)
    for lam, mult in quad.roots:
        if cfg.is_general and lam * direction[2] > snap:
            continue
        pt = base + lam * direction
        candidates.append((pt[:2].copy(), MinkVec3(*map(float, pt)), mult))
    merged = _merge(candidates, MERGE_RTOL * cfg.scale)
    return FiberResult(
        points=tuple(Point2(float(p[0][0]), float(p[0][1])) for p in merged),
        multiplicities=tuple(min(2, p[2]) for p in merged),
        lifted=tuple(p[1] for p in merged),
    )


# --- numerical oracle -------------------------------------------------------


def default_box(cfg: SensorConfig, margin: float = 4.0):
    pts = np.asarray(cfg.sensors)
    center = pts.mean(axis=0)
    half = margin * cfg.scale
    return (center - half, center + half)


def _jacobians(cfg: SensorConfig, xs: np.ndarray) -> np.ndarray:
    units = []
    for m in cfg.user_sensors:
        diff = xs - np.asarray(m)
        units.append(diff / np.maximum(np.hypot(diff[:, 0], diff[:, 1]), 1e-300)[:, None])
    return np.stack([units[1] - units[0], units[2] - units[0]], axis=1)


def _grid_rho(cfg: SensorConfig, x0: np.ndarray, x1: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """Squared residual from plain distance differences; accurate enough inside the box."""
    m0, m1, m2 = cfg.user_sensors
    d0 = np.hypot(x0 - m0[0], x1 - m0[1])
    r1 = np.hypot(x0 - m1[0], x1 - m1[1]) - d0 - tau[0]
    r2 = np.hypot(x0 - m2[0], x1 - m2[1]) - d0 - tau[1]
    return r1 * r1 + r2 * r2


def _local_minima(rho: np.ndarray, wrap_axis1: bool = False) -> np.ndarray:
    padded = np.pad(rho, 1, constant_values=np.inf)
    if wrap_axis1:
        padded[1:-1, 0] = rho[:, -1]
        padded[1:-1, -1] = rho[:, 0]
    is_min = np.ones(rho.shape, dtype=bool)
    n0, n1 = rho.shape
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di or dj:
                is_min &= rho <= padded[1 + di : 1 + di + n0, 1 + dj : 1 + dj + n1]
    return is_min


def _gauss_newton(cfg: SensorConfig, tau: np.ndarray, xs: np.ndarray,
                  max_iter: int = 50) -> tuple[np.ndarray, np.ndarray]:
    def residual(p):
        return tau2_many(cfg, p) - tau

    xs = xs.copy()
    r = residual(xs)
    rho = np.sum(r * r, axis=1)
    done_rho = (1e-13 * cfg.scale) ** 2
    # seeds leave the active set once converged or once the line search fails
    active = rho > done_rho
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if len(idx) == 0:
            break
        x_a, r_a, rho_a = xs[idx], r[idx], rho[idx]
        jac = _jacobians(cfg, x_a)
        det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
        safe = np.abs(det) > 1e-300
        step = np.zeros_like(x_a)
        # 2x2 solve by Cramer's rule; singular Jacobians fall back to a gradient step
        step[safe, 0] = -(jac[safe, 1, 1] * r_a[safe, 0] - jac[safe, 0, 1] * r_a[safe, 1]) / det[safe]
        step[safe, 1] = -(jac[safe, 0, 0] * r_a[safe, 1] - jac[safe, 1, 0] * r_a[safe, 0]) / det[safe]
        step[~safe] = -np.einsum("nij,ni->nj", jac[~safe], r_a[~safe])
        # full step first; seeds it does not improve backtrack over all halvings at once
        full = x_a + step
        fr = residual(full)
        frho = np.sum(fr * fr, axis=1)
        ok = frho < rho_a
        xs[idx[ok]], r[idx[ok]], rho[idx[ok]] = full[ok], fr[ok], frho[ok]
        back = np.flatnonzero(~ok)
        if len(back):
            trial = x_a[back, None, :] + _ALPHAS[None, 1:, None] * step[back, None, :]
            tr = residual(trial)
            trho = np.sum(tr * tr, axis=-1)
            better = trho < rho_a[back, None]
            found = better.any(axis=1)
            first = np.argmax(better, axis=1)
            rows = np.flatnonzero(found)
            hit = idx[back[rows]]
            xs[hit] = trial[rows, first[rows]]
            r[hit] = tr[rows, first[rows]]
            rho[hit] = trho[rows, first[rows]]
            active[idx[back[~found]]] = False
        active &= rho > done_rho
    return xs, np.sqrt(rho)


def oracle_locate(cfg: SensorConfig, tau, box=None, grid_n: int = 64,
                  far_seeds: bool = True, accept_rtol: float = 1e-9) -> FiberResult:
    """Independent grid search plus damped Gauss-Newton for the preimages of tau.

    Seeds are the local minima of the squared residual over a grid of the box,
    over a finer grid around the sensors and, when ``far_seeds`` is set, over
    a log-polar grid reaching far outside the box.
    """
    if grid_n < 64:
        raise ValueError("grid_n must be at least 64")
    if box is None:
        box = default_box(cfg)
    lo, hi = np.asarray(box[0], dtype=float), np.asarray(box[1], dtype=float)
    tau_arr = np.array([float(tau[0]), float(tau[1])])
    box_size = float(np.max(hi - lo))
    center = 0.5 * (lo + hi)

    gx, gy = np.meshgrid(np.linspace(lo[0], hi[0], grid_n), np.linspace(lo[1], hi[1], grid_n))
    is_min = _local_minima(_grid_rho(cfg, gx, gy, tau_arr))
    near = np.stack([gx[is_min], gy[is_min]], axis=-1)

    # the two roots of a double fiber can sit closer than one coarse cell
    pts = np.asarray(cfg.sensors)
    f_lo = pts.min(axis=0) - 0.5 * cfg.scale
    f_hi = pts.max(axis=0) + 0.5 * cfg.scale
    n_fine = 2 * grid_n
    fx, fy = np.meshgrid(np.linspace(f_lo[0], f_hi[0], n_fine), np.linspace(f_lo[1], f_hi[1], n_fine))
    is_min = _local_minima(_grid_rho(cfg, fx, fy, tau_arr))
    seeds = [np.concatenate([near, np.stack([fx[is_min], fy[is_min]], axis=-1)])]

    if far_seeds:
        radii = 0.5 * box_size * np.geomspace(1.0, 1e8, 32)
        angles = np.linspace(0.0, 2.0 * np.pi, 96, endpoint=False)
        rr, aa = np.meshgrid(radii, angles, indexing="ij")
        polar = np.stack([center[0] + rr * np.cos(aa), center[1] + rr * np.sin(aa)], axis=-1)
        prho = np.sum((tau2_many(cfg, polar) - tau_arr) ** 2, axis=-1)
        seeds.append(polar[_local_minima(prho, wrap_axis1=True)])

    # near and far minima get separate budgets: the flat far field produces
    # many shallow minima that must not crowd out the near ones
    picked = []
    for group, budget in zip(seeds, (48, 16)):
        if len(group):
            g_rho = np.sum((tau2_many(cfg, group) - tau_arr) ** 2, axis=1)
            picked.append(group[np.argsort(g_rho, kind="stable")[:budget]])
    if not picked:
        return FiberResult()
    starts = np.concatenate(picked)
    xs, res = _gauss_newton(cfg, tau_arr, starts)
    good = xs[res <= accept_rtol * cfg.scale]

    # far from the box the map flattens, so converged copies of one root
    # spread in proportion to their distance
    merged: list[np.ndarray] = []
    for p in good:
        radius = 1e-6 * max(box_size, float(np.linalg.norm(p - center)))
        if all(np.linalg.norm(q - p) > radius for q in merged):
            merged.append(p)
    merged.sort(key=lambda q: (q[0], q[1]))
    return FiberResult(
        points=tuple(Point2(float(q[0]), float(q[1])) for q in merged),
        multiplicities=tuple(1 for _ in merged),
    )
