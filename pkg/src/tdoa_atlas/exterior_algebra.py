"""Coordinate exterior algebra of the Euclidean plane and of Minkowski 3-space.

Minkowski space here is R^3 with the bilinear form

    <u, v> = u1*v1 + u2*v2 - u3*v3

and the fixed orthonormal basis (e1, e2, e3). Bivectors are stored on the
basis (e1^e2, e1^e3, e2^e3) and trivectors on omega = e1^e2^e3. Inner products
of k-vectors are Gram determinants, so the bivector basis has signature (1, 2)
and <omega, omega> = -1.

Covectors use the same component layout. The musical isomorphisms (flat and
sharp) only flip the sign of the third component, and the Hodge star tables
are identical for vectors and covectors.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Union

from .errors import DependentForms

DEPENDENCE_RTOL = 1e-12


class EucVec2(NamedTuple):
    u1: float
    u2: float


class EucBivec2(NamedTuple):
    """Coefficient on e1^e2 in the Euclidean plane."""

    c12: float


class MinkVec3(NamedTuple):
    u1: float
    u2: float
    u3: float


class MinkBivec3(NamedTuple):
    c12: float
    c13: float
    c23: float


class MinkTrivec3(NamedTuple):
    c123: float


E1 = MinkVec3(1.0, 0.0, 0.0)
E2 = MinkVec3(0.0, 1.0, 0.0)
E3 = MinkVec3(0.0, 0.0, 1.0)
OMEGA = MinkTrivec3(1.0)

MinkElement = Union[float, MinkVec3, MinkBivec3, MinkTrivec3]
EucElement = Union[float, EucVec2, EucBivec2]


# --- Euclidean plane -------------------------------------------------------


def wedge2(u, v) -> float:
    """Coefficient of u^v on e1^e2, i.e. the 2x2 determinant [u v]."""
    return u[0] * v[1] - u[1] * v[0]


def euc_inner(x: EucElement, y: EucElement) -> float:
    if isinstance(x, EucBivec2):
        return x.c12 * y.c12
    if isinstance(x, EucVec2):
        return x.u1 * y.u1 + x.u2 * y.u2
    return float(x) * float(y)


def euc_hodge_star(x: EucElement) -> EucElement:
    """Hodge star of the oriented Euclidean plane.

    *1 = e1^e2, *e1 = e2, *e2 = -e1, *(e1^e2) = 1.
    """
    if isinstance(x, EucBivec2):
        return float(x.c12)
    if isinstance(x, EucVec2):
        return EucVec2(-x.u2, x.u1)
    return EucBivec2(float(x))


# --- Minkowski space -------------------------------------------------------


def mink_inner(u, v) -> float:
    return u[0] * v[0] + u[1] * v[1] - u[2] * v[2]


def mink_norm2(u) -> float:
    return mink_inner(u, u)


def bivec_inner(p: MinkBivec3, q: MinkBivec3) -> float:
    """Gram-determinant inner product; e1^e2 is spacelike, the other two timelike."""
    return p[0] * q[0] - p[1] * q[1] - p[2] * q[2]


def trivec_inner(p: MinkTrivec3, q: MinkTrivec3) -> float:
    return -p[0] * q[0]


def inner(x: MinkElement, y: MinkElement) -> float:
    """Inner product of two Minkowski k-vectors of the same grade."""
    if isinstance(x, MinkTrivec3):
        return trivec_inner(x, y)
    if isinstance(x, MinkBivec3):
        return bivec_inner(x, y)
    if isinstance(x, MinkVec3):
        return mink_inner(x, y)
    return float(x) * float(y)


def wedge(u, v) -> MinkBivec3:
    return MinkBivec3(
        u[0] * v[1] - u[1] * v[0],
        u[0] * v[2] - u[2] * v[0],
        u[1] * v[2] - u[2] * v[1],
    )


def wedge_vec_bivec(u, p: MinkBivec3) -> MinkTrivec3:
    return MinkTrivec3(u[0] * p[2] - u[1] * p[1] + u[2] * p[0])


def wedge3(u, v, w) -> MinkTrivec3:
    return wedge_vec_bivec(u, wedge(v, w))


def hodge_star(x: MinkElement) -> MinkElement:
    """Hodge star of Minkowski 3-space, extended linearly from the basis tables.

    *1 = omega,        *omega = -1,
    *e1 = e2^e3,       *e2 = -e1^e3,     *e3 = -e1^e2,
    *(e1^e2) = e3,     *(e1^e3) = e2,    *(e2^e3) = -e1.
    """
    if isinstance(x, MinkTrivec3):
        return -float(x.c123)
    if isinstance(x, MinkBivec3):
        return MinkVec3(-x.c23, x.c13, x.c12)
    if isinstance(x, MinkVec3):
        return MinkBivec3(-x.u3, -x.u2, x.u1)
    return MinkTrivec3(float(x))


def star_wedge(u, v) -> MinkVec3:
    """*(u ^ v); vanishes exactly when u and v are parallel."""
    return hodge_star(wedge(u, v))


def flat(u) -> MinkVec3:
    return MinkVec3(u[0], u[1], -u[2])


def sharp(alpha) -> MinkVec3:
    return MinkVec3(alpha[0], alpha[1], -alpha[2])


def interior_product(u, form: MinkBivec3 | MinkTrivec3):
    """Contraction i_u of a 2-form (returns a covector) or a 3-form (returns a 2-form)."""
    if isinstance(form, MinkTrivec3):
        c = form.c123
        return MinkBivec3(c * u[2], -c * u[1], c * u[0])
    c12, c13, c23 = form
    return MinkVec3(
        -c12 * u[1] - c13 * u[2],
        c12 * u[0] - c23 * u[2],
        c13 * u[0] + c23 * u[1],
    )


def solve_interior_3form(theta: MinkTrivec3, alpha, beta) -> MinkVec3:
    """The unique u with i_u(theta) = alpha ^ beta, namely (*(alpha^beta))^sharp / *theta."""
    scale = 1.0 / hodge_star(theta)
    g = sharp(star_wedge(alpha, beta))
    return MinkVec3(scale * g[0], scale * g[1], scale * g[2])


def _euclid_norm(u) -> float:
    return math.sqrt(sum(c * c for c in u))


def interior_product_solve(alpha, beta) -> MinkVec3:
    """Generator of the vectors u with i_u(alpha ^ beta) = 0.

    The returned generator is normalized so that i_u(omega) = alpha ^ beta.
    Raises DependentForms when alpha and beta are parallel.
    """
    ab = wedge(alpha, beta)
    if _euclid_norm(ab) <= DEPENDENCE_RTOL * _euclid_norm(alpha) * _euclid_norm(beta):
        raise DependentForms("alpha and beta are linearly dependent")
    return solve_interior_3form(OMEGA, alpha, beta)
