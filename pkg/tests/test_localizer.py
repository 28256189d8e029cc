import math

import numpy as np
import pytest

from tdoa_atlas import exterior_algebra as ea
from tdoa_atlas.errors import CoincidentPlanes, DependentPlanes, NoRealRoots
from tdoa_atlas.localizer import l21_line, locate, oracle_locate, solve_lambda
from tdoa_atlas.sensor_config import line_splits
from tdoa_atlas.tau_domain import RegionKind, build_p2, classify_tau, tangency_points
from tdoa_atlas.tdoa_forward import RankLabel, rank_at, tau2

from conftest import random_collinear, random_general

SQ8 = 2 * math.sqrt(2)
TAU_DEMO = (1.9, 2.7)


def _plane_residuals(cfg, tau, X):
    """<D_i0, D_0(X)> - |D_i0|^2 / 2 for i = 1, 2, in the internal frame."""
    t1, t2 = cfg.to_internal(tau)
    m0 = np.asarray(cfg.m0)
    D0X = ea.MinkVec3(X[0] - m0[0], X[1] - m0[1], X[2])
    out = []
    for mi, ti in ((cfg.m1, t1), (cfg.m2, t2)):
        Di0 = ea.MinkVec3(mi[0] - m0[0], mi[1] - m0[1], ti)
        out.append(ea.mink_inner(Di0, D0X) - 0.5 * ea.mink_norm2(Di0))
    return out


def _regular_source(rng, cfg, box=5.0):
    while True:
        x = rng.uniform(-box, box, 2)
        if rank_at(cfg, x, band=1e-6 * cfg.scale) is RankLabel.RANK2:
            return x


def _segment_hits_half_line(p, q, base, direction):
    d = q - p
    den = ea.wedge2(d, direction)
    if den == 0:
        return False
    w = base - p
    s = ea.wedge2(w, direction) / den
    t = ea.wedge2(w, d) / den
    return 0 <= s <= 1 and t >= 0


# --- the line L21 ------------------------------------------------------------------


def test_l21_line_lies_in_both_planes(demo):
    line = l21_line(demo, (0, 0))
    assert line.base[2] == 0
    for lam in (0.0, 1.0, -2.5):
        X = np.asarray(line.base) + lam * np.asarray(line.direction)
        assert max(map(abs, _plane_residuals(demo, (0, 0), X))) <= 1e-10


def test_l21_line_random_configs():
    rng = np.random.default_rng(51)
    for _ in range(200):
        cfg = random_general(rng)
        tau = tau2(cfg, _regular_source(rng, cfg))
        line = l21_line(cfg, tau)
        assert line.base[2] == 0
        for lam in (0.0, 1.0):
            X = np.asarray(line.base) + lam * np.asarray(line.direction)
            assert max(map(abs, _plane_residuals(cfg, tau, X))) <= 1e-10 * cfg.scale**2


def test_l21_line_collinear(collinear):
    tau = (0.2, 0.5)
    line = l21_line(collinear, tau)
    for lam in (0.0, 1.0):
        X = np.asarray(line.base) + lam * np.asarray(line.direction)
        assert max(map(abs, _plane_residuals(collinear, tau, X))) <= 1e-12
    with pytest.raises(DependentPlanes):
        l21_line(collinear, (0.5, -0.5))
    with pytest.raises(CoincidentPlanes):
        l21_line(collinear, (1.0, -1.0))


# --- the quadratic -------------------------------------------------------------------


def test_solve_lambda_examples(demo):
    q = solve_lambda(demo, (0, 0))
    lams = [lam for lam, _ in q.roots]
    assert len(lams) == 2 and lams[0] < 0 < lams[1]
    q = solve_lambda(demo, (2, SQ8))
    assert q.roots == ((pytest.approx(0.0, abs=1e-12), 2),)
    q = solve_lambda(demo, TAU_DEMO)
    assert len(q.roots) == 2 and all(lam < 0 for lam, _ in q.roots)
    assert q.roots[0][0] != q.roots[1][0]


def test_roots_satisfy_quadratic():
    rng = np.random.default_rng(52)
    for _ in range(300):
        cfg = random_general(rng)
        q = solve_lambda(cfg, tau2(cfg, _regular_source(rng, cfg)))
        big = max(abs(q.a), abs(q.b), abs(q.c))
        for lam, _ in q.roots:
            scale = max(1.0, lam * lam)
            assert abs(q.a * lam * lam + 2 * q.b * lam + q.c) <= 1e-9 * big * scale


def test_no_real_roots_outside_polygon(demo):
    # just outside the F2+ facet the discriminant is negative
    with pytest.raises(NoRealRoots):
        solve_lambda(demo, (2.1, 0.5))


# --- locate -----------------------------------------------------------------------------


def test_locate_examples(demo, collinear):
    fiber = locate(demo, (0, 0))
    assert fiber.count == 1
    assert fiber.points[0] == pytest.approx((1.0, 1.0), abs=1e-12)
    t = tau2(demo, (5, 3))
    fiber = locate(demo, t)
    assert fiber.contains((5, 3), 1e-7 * demo.scale)
    assert fiber.count == classify_tau(demo, t).fiber_count()
    fiber = locate(collinear, (1, -1))
    assert fiber.count == math.inf
    assert fiber.half_line.base == (-1.0, 0.0)
    assert fiber.half_line.direction == (-1.0, 0.0)
    assert fiber.contains((-7.0, 0.0), 1e-12)


def test_locate_vertex_r0_and_outside(demo):
    fiber = locate(demo, (2, SQ8))
    assert fiber.points == ((0.0, 0.0),)
    assert locate(demo, (3, 0)).count == 0
    assert locate(demo, tangency_points(demo).R0_1).count == 0


def test_locate_clockwise_round_trip(clockwise):
    rng = np.random.default_rng(53)
    for _ in range(200):
        x = _regular_source(rng, clockwise)
        t = tau2(clockwise, x)
        fiber = locate(clockwise, t)
        assert fiber.contains(x, 1e-7 * clockwise.scale)
        assert fiber.count == classify_tau(clockwise, t).fiber_count()


def test_located_points_lie_on_past_cone():
    rng = np.random.default_rng(54)
    for _ in range(300):
        cfg = random_general(rng)
        tau = tau2(cfg, _regular_source(rng, cfg))
        fiber = locate(cfg, tau)
        t1, t2 = cfg.to_internal(tau)
        for X in fiber.lifted:
            D0 = ea.MinkVec3(X[0] - cfg.m0[0], X[1] - cfg.m0[1], X[2])
            assert abs(ea.mink_norm2(D0)) <= 1e-9 * cfg.scale**2
            assert X[2] <= min(t1, t2, 0.0) + 1e-9 * cfg.scale
        for p in fiber.points:
            assert math.dist(tau2(cfg, p), tau) <= 1e-7 * cfg.scale


def test_double_fiber_straddles_the_curve_through_m0(demo):
    r0, r1, r2 = line_splits(demo)
    rng = np.random.default_rng(55)
    checked = 0
    while checked < 50:
        x = _regular_source(rng, demo, box=20.0)
        t = tau2(demo, x)
        label = classify_tau(demo, t)
        if label.kind is not RegionKind.DOUBLE or label.index != 0:
            continue
        p, q = (np.asarray(pt) for pt in locate(demo, t).points)
        assert np.linalg.norm(p - q) > 0
        hits = sum(
            _segment_hits_half_line(p, q, np.asarray(hl.base), np.asarray(hl.direction))
            for hl in (r1.plus, r2.plus)
        )
        assert hits % 2 == 1
        checked += 1


def test_collinear_double_fibers_are_mirror_images():
    rng = np.random.default_rng(56)
    for _ in range(20):
        cfg = random_collinear(rng)
        u = np.asarray(cfg.d10_vec) / cfg.d10
        m0 = np.asarray(cfg.m0)
        for _ in range(20):
            x = m0 + rng.uniform(-10, 10) * u + rng.uniform(0.1, 10) * np.array([-u[1], u[0]])
            fiber = locate(cfg, tau2(cfg, x))
            assert fiber.count == 2
            p, q = (np.asarray(pt) for pt in fiber.points)
            # reflect q across the sensor line
            rel = q - m0
            mirror = m0 + 2 * (rel @ u) * u - rel
            assert np.linalg.norm(mirror - p) <= 1e-9 * cfg.scale
            assert fiber.contains(x, 1e-7 * cfg.scale)


# --- the oracle ---------------------------------------------------------------------------


def test_oracle_examples(demo):
    assert oracle_locate(demo, (3, 0)).count == 0
    fiber = oracle_locate(demo, (0, 0))
    assert fiber.count == 1
    assert fiber.points[0] == pytest.approx((1.0, 1.0), abs=1e-9)


def test_oracle_on_facet_finds_point_on_half_line(demo):
    poly = build_p2(demo)
    # midpoint of the F2+ facet between R0 and (2, 0): tau1 = d10
    t = (2.0, 0.5 * (SQ8 + tangency_points(demo).T2p[1]))
    assert poly.max_signed_distance(t) == pytest.approx(0.0, abs=1e-15)
    fiber = oracle_locate(demo, t)
    assert fiber.count == 1
    x = fiber.points[0]
    # a double root: the residual tolerance allows a square-root-sized offset
    assert abs(x[1]) <= 1e-4 * demo.scale and x[0] < 0


def test_oracle_rejects_coarse_grid(demo):
    with pytest.raises(ValueError):
        oracle_locate(demo, (0, 0), grid_n=32)


def test_oracle_agrees_with_closed_form():
    rng = np.random.default_rng(57)
    for _ in range(100):
        cfg = random_general(rng)
        x = _regular_source(rng, cfg)
        t = tau2(cfg, x)
        fiber, oracle = locate(cfg, t), oracle_locate(cfg, t)
        assert oracle.count <= fiber.count
        for p in oracle.points:
            assert fiber.contains(p, 1e-5 * cfg.scale)
