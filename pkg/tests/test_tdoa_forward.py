import math

import numpy as np
import pytest

from tdoa_atlas.errors import AtSensorError
from tdoa_atlas.sensor_config import halfline_membership, line_splits
from tdoa_atlas.tdoa_forward import (
    RankLabel,
    det_jacobian,
    jacobian,
    rank_at,
    sample_level_set,
    tau2,
    tau2_many,
    tau2_star,
)

from conftest import random_general

SQ8 = 2 * math.sqrt(2)


def _fd_jacobian(cfg, x, h):
    x = np.asarray(x, dtype=float)
    cols = []
    for e in np.eye(2):
        cols.append((np.array(tau2(cfg, x + h * e)) - np.array(tau2(cfg, x - h * e))) / (2 * h))
    return np.stack(cols, axis=1)


def test_tau2_examples(demo):
    assert tau2(demo, (1, 1)) == (0.0, 0.0)
    assert tau2(demo, (0, 0)) == pytest.approx((2.0, SQ8), abs=1e-15)
    # d0 = d2 = 2 at m1
    assert tau2(demo, (2, 0)) == (-2.0, 0.0)


def test_tau2_star_examples(demo):
    assert tau2_star(demo, (1, 1)) == (0.0, 0.0, 0.0)
    assert tau2_star(demo, (0, 0)) == pytest.approx((2.0, SQ8, SQ8 - 2.0), abs=1e-15)


def test_clockwise_keeps_caller_order(clockwise):
    # the caller's m1 is (2, 2)
    assert tau2(clockwise, (0, 0)) == pytest.approx((SQ8, 2.0), abs=1e-15)


def test_tau2_many_matches_scalar(demo):
    rng = np.random.default_rng(31)
    xs = rng.uniform(-5, 5, size=(40, 2))
    got = tau2_many(demo, xs)
    want = np.array([tau2(demo, x) for x in xs])
    assert np.array_equal(got, want)


def test_forward_triple_on_plane_and_triangle_bound():
    rng = np.random.default_rng(32)
    for _ in range(20):
        cfg = random_general(rng)
        m0, m1, m2 = (np.asarray(m) for m in cfg.user_sensors)
        d10, d20, d21 = (np.linalg.norm(a - b) for a, b in ((m1, m0), (m2, m0), (m2, m1)))
        xs = rng.uniform(-10, 10, size=(500, 2))
        for x in xs:
            t10, t20, t21 = tau2_star(cfg, x)
            assert abs(t10 - t20 + t21) <= 1e-12 * cfg.scale
            assert abs(t10) <= d10 * (1 + 1e-15)
            assert abs(t20) <= d20 * (1 + 1e-15)
            assert abs(t21) <= d21 * (1 + 1e-15)


def test_jacobian_rows_parallel_on_r0(demo):
    j = jacobian(demo, (2, 4))
    assert j.row1 == pytest.approx(j.row2, abs=1e-15)


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(33)
    for _ in range(30):
        cfg = random_general(rng)
        for x in rng.uniform(-10, 10, size=(20, 2)):
            if rank_at(cfg, x, band=1e-3 * cfg.scale) is not RankLabel.RANK2:
                continue
            j = np.array(jacobian(cfg, x))
            fd = _fd_jacobian(cfg, x, 1e-6 * cfg.scale)
            for row, fd_row in zip(j, fd):
                assert np.linalg.norm(row - fd_row) <= 1e-5 * max(np.linalg.norm(row), 1e-3)
            assert np.all(np.linalg.norm(j, axis=1) <= 2 + 1e-15)


def test_jacobian_at_sensor(demo):
    with pytest.raises(AtSensorError):
        jacobian(demo, (0, 0))


def test_det_jacobian_examples(demo, collinear):
    assert abs(det_jacobian(demo, (-1, 0))) <= 1e-10
    fd = np.linalg.det(_fd_jacobian(demo, (1, 1), 1e-6))
    assert det_jacobian(demo, (1, 1)) == pytest.approx(fd, rel=1e-6)
    assert det_jacobian(collinear, (0.5, 0)) == 0


def test_gradient_vanishes_on_opposite_half_lines(demo):
    # tau_i is constant along the two half-lines of the line m0 m_j
    r0, r1, r2 = line_splits(demo)
    for i, split in ((1, r1), (2, r2)):
        for hl in (split.plus, split.minus):
            for s in (0.5, 3.0, 40.0):
                x = np.asarray(hl.base) + s * np.asarray(hl.direction)
                j = jacobian(demo, x)
                row = j.row2 if i == 1 else j.row1
                assert np.linalg.norm(row) <= 1e-9


def test_rank_examples(demo, collinear):
    assert rank_at(demo, (-1, 0)) is RankLabel.RANK1
    assert rank_at(demo, (1, 1)) is RankLabel.RANK2
    assert rank_at(demo, (1, 0)) is RankLabel.RANK2
    assert rank_at(demo, (2, 2)) is RankLabel.AT_SENSOR
    assert rank_at(collinear, (3, 0)) is RankLabel.RANK0
    assert rank_at(collinear, (0.5, 0)) is RankLabel.RANK1


def test_det_sign_constant_on_paths_avoiding_locus(demo):
    # a small circle around (1, 1) stays inside one component
    angles = np.linspace(0, 2 * np.pi, 200)
    dets = [det_jacobian(demo, (1 + 0.3 * np.cos(a), 1 + 0.3 * np.sin(a))) for a in angles]
    assert all(d < 0 for d in dets) or all(d > 0 for d in dets)


def test_level_set_examples(demo):
    assert sample_level_set(demo, 1, 3.0, 10) == []
    pts = sample_level_set(demo, 1, 0.0, 11)
    assert all(p[0] == pytest.approx(1.0, abs=1e-15) for p in pts)
    pts = sample_level_set(demo, 1, 2.0, 11)
    for p in pts:
        assert halfline_membership(demo, p, 1e-12) >= {(2, "+")}


@pytest.mark.parametrize("i, tau", [(1, 1.3), (1, -0.4), (2, 2.5), (2, -2.7), (2, -SQ8)])
def test_level_set_round_trip(demo, i, tau):
    pts = sample_level_set(demo, i, tau, 50)
    assert len(pts) == 50
    for p in pts:
        assert abs(tau2(demo, p)[i - 1] - tau) <= 1e-9 * demo.scale
