from __future__ import annotations

import math

import numpy as np
import pytest

from tdoa_atlas.sensor_config import build_config

DEMO = ((0.0, 0.0), (2.0, 0.0), (2.0, 2.0))
OBTUSE = ((0.0, 0.0), (2.0, 0.0), (-2.0, 2.0))
CLOCKWISE = ((0.0, 0.0), (2.0, 2.0), (2.0, 0.0))
COLLINEAR = ((0.0, 0.0), (1.0, 0.0), (-1.0, 0.0))


@pytest.fixture
def demo():
    return build_config(*DEMO)


@pytest.fixture
def obtuse():
    return build_config(*OBTUSE)


@pytest.fixture
def clockwise():
    return build_config(*CLOCKWISE)


@pytest.fixture
def collinear():
    return build_config(*COLLINEAR)


def min_angle(pts) -> float:
    """Smallest interior angle of the sensor triangle, in degrees."""
    angles = []
    for i in range(3):
        a, b, c = (np.asarray(pts[(i + k) % 3]) for k in range(3))
        u, v = b - a, c - a
        cos = np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v))
        angles.append(math.degrees(math.acos(np.clip(cos, -1.0, 1.0))))
    return min(angles)


def random_general(rng: np.random.Generator, half_width: float = 5.0,
                   min_angle_deg: float = 5.0):
    """Random non-collinear sensor triple in a square, with no sliver triangles."""
    while True:
        pts = rng.uniform(-half_width, half_width, size=(3, 2))
        dists = [np.linalg.norm(pts[i] - pts[j]) for i, j in ((0, 1), (0, 2), (1, 2))]
        if min(dists) < 0.05 * max(dists) or min_angle(pts) < min_angle_deg:
            continue
        cfg = build_config(*pts)
        if cfg.is_general:
            return cfg


def random_collinear(rng: np.random.Generator, half_width: float = 5.0):
    while True:
        origin = rng.uniform(-half_width, half_width, 2)
        theta = rng.uniform(0, np.pi)
        u = np.array([np.cos(theta), np.sin(theta)])
        s = rng.uniform(-half_width, half_width, 3)
        gaps = np.abs(np.subtract.outer(s, s))[np.triu_indices(3, 1)]
        if gaps.min() < 0.1 * gaps.max():
            continue
        cfg = build_config(*(origin + si * u for si in s))
        if not cfg.is_general:
            return cfg


def points_near(a, b, tol: float) -> bool:
    return math.dist(a, b) <= tol
