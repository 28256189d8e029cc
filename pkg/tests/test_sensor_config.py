import json
import math

import numpy as np
import pytest

from tdoa_atlas.errors import DegenerateConfigError
from tdoa_atlas.sensor_config import (
    Collinear,
    General,
    build_config,
    collinear_membership,
    config_to_json,
    halfline_membership,
    line_splits,
    load_config,
)

from conftest import CLOCKWISE, COLLINEAR, DEMO, random_general


def test_demo_config(demo):
    assert isinstance(demo.geometry_class, General)
    assert demo.d10 == 2.0
    assert demo.d20 == pytest.approx(2 * math.sqrt(2), rel=1e-15)
    assert demo.d21 == 2.0
    assert demo.orientation == 1
    assert not demo.swapped
    assert demo.scale == demo.d20


def test_collinear_config(collinear):
    gc = collinear.geometry_class
    assert isinstance(gc, Collinear)
    assert gc.k == -1.0
    assert gc.between == 0


@pytest.mark.parametrize("pts, between", [
    (((0, 0), (1, 0), (-1, 0)), 0),
    (((0, 0), (4, 0), (1, 0)), 2),
    (((0, 0), (1, 0), (3, 0)), 1),
])
def test_collinear_interior_sensor(pts, between):
    assert build_config(*pts).geometry_class.between == between


def test_coincident_sensors_rejected():
    with pytest.raises(DegenerateConfigError):
        build_config((0, 0), (0, 0), (1, 1))


def test_non_finite_rejected():
    with pytest.raises(DegenerateConfigError):
        build_config((0, 0), (math.nan, 0), (1, 1))


def test_rel_tol_range():
    with pytest.raises(ValueError):
        build_config(*DEMO, rel_tol=0.0)
    with pytest.raises(ValueError):
        build_config(*DEMO, rel_tol=0.1)


def test_clockwise_triple_is_swapped(clockwise):
    assert clockwise.swapped
    assert clockwise.orientation == -1
    assert clockwise.wedge > 0
    assert clockwise.user_sensors == tuple(tuple(p) for p in CLOCKWISE)
    assert clockwise.to_internal((1.0, 2.0)) == (2.0, 1.0)
    assert clockwise.user_index(1) == 2


def test_relabel_idempotent(demo):
    again = build_config(*demo.sensors)
    assert not again.swapped
    assert again.sensors == demo.sensors


def test_strict_triangle_inequalities():
    rng = np.random.default_rng(21)
    for _ in range(200):
        cfg = random_general(rng)
        assert abs(cfg.d20 - cfg.d21) < cfg.d10
        assert abs(cfg.d10 - cfg.d21) < cfg.d20
        assert abs(cfg.d10 - cfg.d20) < cfg.d21


def test_collinear_class_invariant_under_similarity():
    rng = np.random.default_rng(22)
    base = np.array(COLLINEAR, dtype=float) + [[0, 0], [0.5, 0], [0, 0]]
    for _ in range(50):
        theta = rng.uniform(0, 2 * np.pi)
        rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        s = 10 ** rng.uniform(-3, 3)
        shift = rng.uniform(-1e3, 1e3, 2)
        pts = s * base @ rot.T + shift
        assert isinstance(build_config(*pts).geometry_class, Collinear)
        tri = s * np.array(DEMO) @ rot.T + shift
        assert isinstance(build_config(*tri).geometry_class, General)


def test_halfline_membership_examples(demo):
    assert halfline_membership(demo, (-1.0, 0.0)) == {(2, "+")}
    assert halfline_membership(demo, (1.0, 0.0)) == {(2, "0")}
    assert halfline_membership(demo, (5.0, 5.0), band=0.0) == set()


def test_line_split_endpoints(demo):
    r0, r1, r2 = line_splits(demo)
    assert r1.plus.base == demo.m0 and r2.plus.base == demo.m0
    assert r0.plus.base == demo.m1
    assert r0.minus.base == demo.m2
    assert tuple(r2.plus.direction) == (-1.0, 0.0)


def test_collinear_membership(collinear):
    assert collinear_membership(collinear, (0.5, 0.0)) == {"r0"}
    assert collinear_membership(collinear, (3.0, 0.0)) == {"rc"}
    assert collinear_membership(collinear, (0.0, 1.0)) == set()


def test_load_and_dump_round_trip(tmp_path, clockwise):
    path = tmp_path / "cfg.json"
    path.write_text(config_to_json(clockwise))
    again = load_config(path)
    assert again.user_sensors == clockwise.user_sensors
    assert again.swapped


def test_load_rejects_bad_document(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"m0": [0, 0], "m1": [1, 0]}))
    with pytest.raises(ValueError):
        load_config(path)
