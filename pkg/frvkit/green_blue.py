#!/usr/bin/env python3
"""
FRVKit Green's and Blue's Functions
Complex and quaternion Green's/Blue's functions of the building blocks

Covers a generic unitary measure, the CUE, a generic Hermitian measure and
the GUE. Quaternion Green's functions of unitary and Hermitian matrices are
obtained from the complex Green's function through two scalar gamma
functions (Hermitization).
"""

import cmath
import logging
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

try:
    from .errors import (DegenerateQuadratic, NoConvergence, OnUnitCircle,
                         OnUnitCircleSingularity, ZeroC)
    from .newton_solver import damped_newton
    from .quaternion import Quaternion, q_eigenvalues, q_inv
except ImportError:
    from errors import (DegenerateQuadratic, NoConvergence, OnUnitCircle,
                        OnUnitCircleSingularity, ZeroC)
    from newton_solver import damped_newton
    from quaternion import Quaternion, q_eigenvalues, q_inv

logger = logging.getLogger(__name__)

UNIT_CIRCLE_TOLERANCE = 1e-12
DEGENERATE_PAIR_TOLERANCE = 1e-8
# (|c|-1)^2 + |d|^2 below this is the |c| = 1, d = 0 ray
SINGULAR_RAY_TOLERANCE = 1e-24


@dataclass(frozen=True)
class ComplexGreens:
    """Complex Green's function z -> G_X(z) of one building block"""
    name: str
    evaluate: Callable[[complex], complex]
    first_moment: complex = 0j
    derivative: Optional[Callable[[complex], complex]] = None

    def __call__(self, z: complex) -> complex:
        return self.evaluate(z)

    def derivative_at(self, z: complex, h: float = 1e-6) -> complex:
        """G'(z); central difference along the real axis when no derivative is given"""
        if self.derivative is not None:
            return self.derivative(z)
        h = h * max(1.0, abs(z))
        return (self.evaluate(z + h) - self.evaluate(z - h)) / (2.0 * h)


@dataclass(frozen=True)
class GammaPair:
    """gamma and gamma' of the Hermitization formulas"""
    gamma: complex
    gamma_prime: complex


class UPair(NamedTuple):
    u1: complex
    u2: complex
    g: float


def g_cue(z: complex) -> complex:
    """
    CUE complex Green's function: 1/z outside the unit disc, 0 inside

    Raises:
        OnUnitCircle: ||z| - 1| < 1e-12
    """
    r = abs(z)
    if abs(r - 1.0) < UNIT_CIRCLE_TOLERANCE:
        raise OnUnitCircle(f"G_CUE is undefined on the unit circle (z={z})")
    return 1.0 / z if r > 1.0 else 0j


def g_cue_derivative(z: complex) -> complex:
    r = abs(z)
    if abs(r - 1.0) < UNIT_CIRCLE_TOLERANCE:
        raise OnUnitCircle(f"G_CUE' is undefined on the unit circle (z={z})")
    return -1.0 / (z * z) if r > 1.0 else 0j


def g_gue(z: complex) -> complex:
    """
    GUE complex Green's function (z - sqrt(z^2 - 4))/2

    The square root is taken as sqrt(z-2)*sqrt(z+2) with principal factors,
    which puts the cut on [-2, 2] and gives G ~ 1/z at infinity.
    """
    z = complex(z)
    s = cmath.sqrt(z - 2.0) * cmath.sqrt(z + 2.0)
    return (z - s) / 2.0


def g_gue_derivative(z: complex) -> complex:
    z = complex(z)
    s = cmath.sqrt(z - 2.0) * cmath.sqrt(z + 2.0)
    return (1.0 - z / s) / 2.0


def semicircle_density(x):
    """Wigner semicircle sqrt(4 - x^2)/(2 pi) on [-2, 2]"""
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) < 2.0, np.sqrt(np.clip(4.0 - x * x, 0.0, None)) / (2.0 * np.pi), 0.0)


CUE_GREENS = ComplexGreens('cue', g_cue, 0j, g_cue_derivative)
GUE_GREENS = ComplexGreens('gue', g_gue, 0j, g_gue_derivative)


def scaled_greens(greens: ComplexGreens, k: float) -> ComplexGreens:
    """Green's function of k*X: G_kX(z) = G_X(z/k)/k"""
    if k <= 0:
        raise ValueError(f"scale must be positive, got {k}")
    if k == 1.0:
        return greens

    def evaluate(z: complex) -> complex:
        return greens.evaluate(z / k) / k

    def derivative(z: complex) -> complex:
        return greens.derivative_at(z / k) / (k * k)

    return ComplexGreens(f"{k:g}*{greens.name}", evaluate, k * greens.first_moment, derivative)


def gamma_pair(greens: ComplexGreens, z1: complex, z2: complex) -> GammaPair:
    """
    gamma = (z1 G(z1) - z2 G(z2))/(z1 - z2), gamma' = (G(z1) - G(z2))/(z1 - z2)

    When |z1 - z2| < 1e-8 * max(1, |z1|) the derivative limit is used:
    gamma' = G'(u), gamma = G(u) + u G'(u) at the midpoint u.
    """
    if abs(z1 - z2) < DEGENERATE_PAIR_TOLERANCE * max(1.0, abs(z1)):
        u = 0.5 * (z1 + z2)
        slope = greens.derivative_at(u)
        return GammaPair(greens(u) + u * slope, slope)
    g1 = greens(z1)
    g2 = greens(z2)
    delta = z1 - z2
    return GammaPair((z1 * g1 - z2 * g2) / delta, (g1 - g2) / delta)


def gamma_pair_reflected(greens: ComplexGreens, u: complex) -> GammaPair:
    """
    Unitary gamma pair from G at a single point |u| > 1

    Uses the reflection conj(G(z)) = (1/conj z)(1 - G(1/conj z)/conj z), valid
    for any measure on the unit circle, to eliminate G(u2) with u2 = 1/conj(u).
    """
    if abs(u) <= 1.0:
        raise ValueError(f"reflected gamma form needs |u| > 1, got |u|={abs(u)}")
    gu = greens(u)
    ugu = u * gu
    denom = u - 1.0 / u.conjugate()
    gamma = (ugu + ugu.conjugate() - 1.0) / denom
    gamma_prime = (gu + u.conjugate() * (ugu.conjugate() - 1.0)) / denom
    return GammaPair(gamma, gamma_prime)


def _ray_distance(c: complex, d: complex) -> float:
    return (abs(c) - 1.0) ** 2 + abs(d) ** 2


def unitary_u_pair(q: Quaternion) -> UPair:
    """
    Roots of conj(c) u^2 - g u + c = 0 with g = |c|^2 + |d|^2 + 1

    Args:
        q: quaternion with components (c, d)

    Returns:
        UPair with |u1| > 1 and conj(u1) u2 = 1

    Raises:
        ZeroC: c = 0
        DegenerateQuadratic: |c| = 1 and d = 0
    """
    c, d = q.a, q.b
    if c == 0:
        raise ZeroC("u-pair undefined for c = 0; use the first-moment formula")
    rc = abs(c)
    lower = _ray_distance(c, d)
    if lower < SINGULAR_RAY_TOLERANCE:
        raise DegenerateQuadratic(f"u1 = u2 on the |c|=1, d=0 ray (c={c}, d={d})")
    upper = (rc + 1.0) ** 2 + abs(d) ** 2
    g = rc * rc + abs(d) ** 2 + 1.0
    root = math.sqrt(lower * upper)
    u1 = (g + root) / (2.0 * c.conjugate())
    u2 = 2.0 * c / (g + root)
    return UPair(u1, u2, g)


def unitary_quaternion_green(greens: ComplexGreens, q: Quaternion) -> Quaternion:
    """
    Quaternion Green's function of a unitary matrix with complex Green's G

    Generic case: a = gamma - gamma'/conj(c), b = -(d/conj(c)) gamma over the
    u-pair. For c = 0 the result depends only on the first moment:
    (a, b) = (-conj(m1), -d)/(|d|^2 + 1).

    Raises:
        OnUnitCircleSingularity: |c| = 1 and d = 0
    """
    c, d = q.a, q.b
    if c == 0:
        norm = abs(d) ** 2 + 1.0
        return Quaternion(-greens.first_moment.conjugate() / norm, -d / norm)
    try:
        u1, u2, _ = unitary_u_pair(q)
    except DegenerateQuadratic as e:
        raise OnUnitCircleSingularity(str(e)) from e
    pair = gamma_pair(greens, u1, u2)
    c_bar = c.conjugate()
    return Quaternion(pair.gamma - pair.gamma_prime / c_bar, -(d / c_bar) * pair.gamma)


def cue_quaternion_green(q: Quaternion) -> Quaternion:
    """
    Closed-form CUE quaternion Green's function

    a = (beta + |c|^2 - |d|^2 - 1)/(2 c beta), b = -d/beta,
    beta = sqrt(g^2 - 4|c|^2). When 1 + |d|^2 - |c|^2 > 0 the a-component is
    evaluated as 2 conj(c) |d|^2/(beta (beta + 1 + |d|^2 - |c|^2)), which is
    the same quantity without the 1/c cancellation near c = 0.

    Raises:
        OnUnitCircleSingularity: |c| = 1 and d = 0
    """
    c, d = q.a, q.b
    d2 = abs(d) ** 2
    if c == 0:
        return Quaternion(0j, -d / (d2 + 1.0))
    rc = abs(c)
    lower = _ray_distance(c, d)
    if lower < SINGULAR_RAY_TOLERANCE:
        raise OnUnitCircleSingularity(f"CUE quaternion Green's function diverges at c={c}, d={d}")
    beta = math.sqrt(lower * ((rc + 1.0) ** 2 + d2))
    t = 1.0 + d2 - rc * rc
    if t > 0:
        a = 2.0 * c.conjugate() * d2 / (beta * (beta + t))
    else:
        a = (beta - t) / (2.0 * c * beta)
    return Quaternion(a, -d / beta)


def hermitian_quaternion_green(greens: ComplexGreens, q: Quaternion) -> Quaternion:
    """
    Quaternion Green's function of a Hermitian matrix: gamma - gamma' Q^dagger

    The gamma pair is taken over the eigenvalues (q, conj q) of Q; for
    q = conj q the derivative limit of gamma_pair applies.
    """
    q1, q2 = q_eigenvalues(q)
    pair = gamma_pair(greens, q1, q2)
    return Quaternion(pair.gamma - pair.gamma_prime * q.a.conjugate(), pair.gamma_prime * q.b)


def gue_quaternion_green(q: Quaternion, p: float = 1.0) -> Quaternion:
    """Quaternion Green's function of p*H, H from the GUE; p = 0 gives 1/Q"""
    if p == 0:
        return q_inv(q)
    return hermitian_quaternion_green(scaled_greens(GUE_GREENS, p), q)


def gue_quaternion_blue(q: Quaternion, p: float = 1.0) -> Quaternion:
    """
    Quaternion Blue's function of p*H: p^2 Q + 1/Q

    Raises:
        SingularQuaternion: Q not invertible
    """
    inverse = q_inv(q)
    p2 = p * p
    return Quaternion(p2 * q.a + inverse.a, p2 * q.b + inverse.b)


def cue_blue_equations(target: Quaternion, trial: Quaternion) -> np.ndarray:
    """
    Residual of the CUE Blue's-function system

    Zero exactly when the CUE quaternion Green's function maps trial (c, d)
    onto target (a, b).

    Returns:
        4 reals (Re, Im of the a- and b-component mismatch)
    """
    return (cue_quaternion_green(trial) - target).components()


def cue_blue_c0(target: Quaternion) -> Quaternion:
    """
    CUE Blue's function on the c = 0 branch

    Requires a = conj(m1) = 0 and 0 < |b| <= 1/2; returns
    (0, -(1 + sqrt(1 - 4|b|^2))/(2 conj(b))).
    """
    b = target.b
    if abs(target.a) > 1e-12:
        raise ValueError(f"c = 0 branch requires a = 0, got a={target.a}")
    b_abs = abs(b)
    if b_abs == 0 or b_abs > 0.5 + 1e-15:
        raise ValueError(f"c = 0 branch requires 0 < |b| <= 1/2, got |b|={b_abs}")
    root = math.sqrt(max(0.0, 1.0 - 4.0 * b_abs * b_abs))
    return Quaternion(0j, -(1.0 + root) / (2.0 * b.conjugate()))


def cue_quaternion_blue(target: Quaternion, seed: Optional[Quaternion] = None) -> Quaternion:
    """
    CUE quaternion Blue's function by numerical inversion

    Args:
        target: Q = (a, b)
        seed: starting (c, d); q_inv(Q) is tried after it

    Returns:
        (c, d) with cue_quaternion_green((c, d)) = Q within 1e-10

    Raises:
        NoConvergence: no seed converged
    """
    if abs(target.a) < 1e-14 and 0 < abs(target.b) <= 0.5:
        return cue_blue_c0(target)

    seeds = []
    if seed is not None:
        seeds.append(seed)
    seeds.append(q_inv(target))

    def residual(x: np.ndarray) -> np.ndarray:
        return cue_blue_equations(target, Quaternion.from_components(x))

    best = None
    for start in seeds:
        result = damped_newton(residual, start.components())
        if best is None or result.residual < best.residual:
            best = result
        if result.converged:
            return Quaternion.from_components(result.x)

    raise NoConvergence(f"CUE Blue's function did not converge at Q={target}",
                        best_residual=best.residual,
                        best=Quaternion.from_components(best.x))
