#!/usr/bin/env python3
"""
FRVKit Addition Engine
Quaternion addition law and numerical functional inversion

Solves B_sum(Q) = diag(z, conj z) for the quaternion Green's function Q when
no closed form is available, then extracts the density, the eigenvector
correlator and the borderline from the numerical solution.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

try:
    from .errors import FRVError, NoBracket, NoConvergence, StencilFailure
    from .green_blue import (cue_quaternion_blue, cue_quaternion_green,
                             gue_quaternion_blue, gue_quaternion_green)
    from .newton_solver import NewtonResult, damped_newton
    from .quaternion import Quaternion, q_inv
except ImportError:
    from errors import FRVError, NoBracket, NoConvergence, StencilFailure
    from green_blue import (cue_quaternion_blue, cue_quaternion_green,
                            gue_quaternion_blue, gue_quaternion_green)
    from newton_solver import NewtonResult, damped_newton
    from quaternion import Quaternion, q_inv

logger = logging.getLogger(__name__)

CONVERGENCE_TOLERANCE = 1e-10
DENSITY_STEP = 1e-4
IMAGINARY_DIAGNOSTIC_LIMIT = 1e-4
INSIDE_TOLERANCE = 1e-10

GreensMap = Callable[[float, float], complex]


class BlueTerm:
    """One free summand, seen through its quaternion Green's and Blue's functions"""
    name = 'term'
    # True when blue() is a closed form
    explicit = True

    def blue(self, q: Quaternion, seed: Optional[Quaternion] = None) -> Quaternion:
        raise NotImplementedError

    def green(self, q: Quaternion) -> Quaternion:
        raise NotImplementedError


@dataclass(frozen=True)
class ZeroTerm(BlueTerm):
    """The zero matrix: Green's and Blue's function are both 1/Q"""
    name = 'zero'

    def blue(self, q: Quaternion, seed: Optional[Quaternion] = None) -> Quaternion:
        return q_inv(q)

    def green(self, q: Quaternion) -> Quaternion:
        return q_inv(q)


@dataclass(frozen=True)
class CueTerm(BlueTerm):
    """k*U with U from the CUE; the Blue's function is inverted numerically"""
    scale: float = 1.0
    name = 'cue'
    explicit = False

    def green(self, q: Quaternion) -> Quaternion:
        k = self.scale
        if k == 1.0:
            return cue_quaternion_green(q)
        return cue_quaternion_green(q.scaled(1.0 / k)).scaled(1.0 / k)

    def blue(self, q: Quaternion, seed: Optional[Quaternion] = None) -> Quaternion:
        k = self.scale
        inner_seed = seed.scaled(1.0 / k) if seed is not None else None
        return cue_quaternion_blue(q.scaled(k), seed=inner_seed).scaled(k)


@dataclass(frozen=True)
class GueTerm(BlueTerm):
    """p*H with H from the GUE: Blue's function p^2 Q + 1/Q"""
    p: float = 1.0
    name = 'gue'

    def blue(self, q: Quaternion, seed: Optional[Quaternion] = None) -> Quaternion:
        return gue_quaternion_blue(q, self.p)

    def green(self, q: Quaternion) -> Quaternion:
        return gue_quaternion_green(q, self.p)


@dataclass
class BlueSum:
    """Free sum of the given terms; B_sum(Q) = sum B_i(Q) - (n-1)/Q"""
    terms: List[BlueTerm]

    def __post_init__(self):
        if not self.terms:
            raise ValueError("BlueSum needs at least one term")

    @property
    def term_count(self) -> int:
        return len(self.terms)

    @classmethod
    def cue_sum(cls, m: int, scale: float = 1.0) -> 'BlueSum':
        return cls([CueTerm(scale) for _ in range(m)])

    @classmethod
    def cue_gue(cls, p: float) -> 'BlueSum':
        second = GueTerm(p) if p > 0 else ZeroTerm()
        return cls([CueTerm(), second])

    def describe(self) -> str:
        labels = []
        for term in self.terms:
            if isinstance(term, CueTerm) and term.scale != 1.0:
                labels.append(f"{term.scale:g}*cue")
            elif isinstance(term, GueTerm):
                labels.append(f"{term.p:g}*gue")
            else:
                labels.append(term.name)
        return ' + '.join(labels)


@dataclass
class InversionResult:
    """Numerical quaternion Green's function at one point z"""
    z: complex
    q: Quaternion
    converged: bool
    residual: float
    iterations: int = 0
    branch: str = 'non-holomorphic'

    @property
    def greens(self) -> complex:
        return self.q.a

    @property
    def corr(self) -> float:
        """|b|^2, equal to -C(z, conj z)"""
        return self.q.b_squared

    @property
    def inside(self) -> bool:
        return self.converged and self.corr > INSIDE_TOLERANCE

    def to_dict(self) -> dict:
        return {
            'z': [self.z.real, self.z.imag],
            'greens': [self.greens.real, self.greens.imag],
            'corr': self.corr,
            'converged': self.converged,
            'residual': self.residual,
            'iterations': self.iterations,
            'branch': self.branch,
        }


def blue_sum_eval(bsum: BlueSum, q: Quaternion,
                  seeds: Optional[Sequence[Optional[Quaternion]]] = None) -> Quaternion:
    """
    Evaluate B_sum(Q) = sum_i B_i(Q) - (n-1) q_inv(Q)

    Args:
        bsum: the free sum
        q: argument
        seeds: optional per-term seeds for numerically inverted terms

    Raises:
        SingularQuaternion: Q not invertible
    """
    inverse = q_inv(q)
    total = inverse.scaled(-(bsum.term_count - 1))
    for index, term in enumerate(bsum.terms):
        seed = seeds[index] if seeds is not None else None
        total = total + term.blue(q, seed=seed)
    return total


def _defining_equation(bsum: BlueSum, z: complex) -> Callable[[Quaternion], Quaternion]:
    """
    Map Q -> mismatch whose zero is the quaternion Green's function at z

    When every numerically inverted term is the same term T (m copies), the
    law is rewritten through T's Green's function,
        Q = G_T(R),  R = (Z - sum_explicit B_j(Q) + (n-1)/Q)/m,
    which avoids nested inversions. Otherwise B_sum(Q) - Z is used directly.
    """
    target = Quaternion.diag(z)
    implicit = [t for t in bsum.terms if not t.explicit]
    explicit = [t for t in bsum.terms if t.explicit]
    n = bsum.term_count

    if implicit and all(t == implicit[0] for t in implicit):
        term = implicit[0]
        m = len(implicit)

        def subordinated(q: Quaternion) -> Quaternion:
            r = target + q_inv(q).scaled(n - 1)
            for other in explicit:
                r = r - other.blue(q)
            return term.green(r.scaled(1.0 / m)) - q

        return subordinated

    def direct(q: Quaternion) -> Quaternion:
        return blue_sum_eval(bsum, q) - target

    return direct


def _start_value(z: complex) -> complex:
    return 1.0 / z if abs(z) > 1e-12 else 0j


def _non_holomorphic_solve(equation, a0: complex, b0: float) -> Tuple[NewtonResult, Optional[Quaternion]]:
    """Unknowns (Re a, Im a, b > 0); the b-equation is divided by b"""

    def residual(x: np.ndarray) -> np.ndarray:
        b = x[2]
        if b <= 0:
            raise ZeroDivisionError("b left the non-holomorphic half-line")
        mismatch = equation(Quaternion(complex(x[0], x[1]), b))
        return np.array([mismatch.a.real, mismatch.a.imag, mismatch.b.real / b, mismatch.b.imag / b])

    def gauge(x: np.ndarray) -> np.ndarray:
        x = x.copy()
        x[2] = abs(x[2])
        return x

    result = damped_newton(residual, [a0.real, a0.imag, b0], project=gauge)
    q = Quaternion(complex(result.x[0], result.x[1]), result.x[2]) if result.x[2] > 0 else None
    return result, q


def _holomorphic_solve(equation, a0: complex) -> Tuple[NewtonResult, Quaternion]:
    """Unknowns (Re a, Im a) with b fixed at 0"""

    def residual(x: np.ndarray) -> np.ndarray:
        mismatch = equation(Quaternion(complex(x[0], x[1]), 0.0))
        return np.array([mismatch.a.real, mismatch.a.imag])

    result = damped_newton(residual, [a0.real, a0.imag])
    return result, Quaternion(complex(result.x[0], result.x[1]), 0.0)


def _true_residual(equation, q: Quaternion) -> float:
    try:
        mismatch = equation(q)
    except (FRVError, ZeroDivisionError, OverflowError, ValueError):
        return float('inf')
    return max(abs(mismatch.a), abs(mismatch.b))


def invert_blue_at(bsum: BlueSum, z: complex, seed: Optional[Quaternion] = None) -> InversionResult:
    """
    Solve B_sum(Q) = diag(z, conj z) for Q

    The non-holomorphic branch (b > 0) is searched first from the seed and
    from (1/z, 0.5); if none converges the holomorphic branch b = 0 is solved
    from (1/z, 0). The b-component is kept real and non-negative.

    Args:
        bsum: the free sum
        z: point of the complex plane
        seed: continuation seed, typically the neighbouring solution

    Returns:
        InversionResult with residual < 1e-10

    Raises:
        NoConvergence: no seed converged on either branch
    """
    z = complex(z)
    equation = _defining_equation(bsum, z)
    a0 = _start_value(z)

    non_holomorphic_seeds: List[Tuple[complex, float]] = []
    holomorphic_seeds: List[complex] = []
    if seed is not None:
        if abs(seed.b) > 0:
            non_holomorphic_seeds.append((seed.a, abs(seed.b)))
        else:
            holomorphic_seeds.append(seed.a)
    non_holomorphic_seeds += [(a0, 0.5), (0j, 0.5), (0j, 1.0)]
    holomorphic_seeds += [a0, 0j]

    best: Optional[InversionResult] = None
    total_iterations = 0

    for a_start, b_start in non_holomorphic_seeds:
        result, q = _non_holomorphic_solve(equation, a_start, b_start)
        total_iterations += result.iterations
        if q is None:
            continue
        residual = _true_residual(equation, q)
        candidate = InversionResult(z, q, residual < CONVERGENCE_TOLERANCE and result.converged,
                                    residual, total_iterations, 'non-holomorphic')
        if candidate.converged:
            return candidate
        if best is None or residual < best.residual:
            best = candidate

    for a_start in holomorphic_seeds:
        result, q = _holomorphic_solve(equation, a_start)
        total_iterations += result.iterations
        residual = _true_residual(equation, q)
        candidate = InversionResult(z, q, residual < CONVERGENCE_TOLERANCE,
                                    residual, total_iterations, 'holomorphic')
        if candidate.converged:
            return candidate
        if best is None or residual < best.residual:
            best = candidate

    best_residual = best.residual if best is not None else float('inf')
    logger.debug(f"inversion failed at z={z} for {bsum.describe()}, best residual {best_residual:.3e}")
    raise NoConvergence(f"quaternion addition law did not converge at z={z}",
                        best_residual=best_residual, best=best)


class NewtonGreensMap:
    """(x, y) -> G(z) through invert_blue_at with continuation seeding"""

    def __init__(self, bsum: BlueSum, seed: Optional[Quaternion] = None):
        self.bsum = bsum
        self.seed = seed

    def solve(self, x: float, y: float) -> InversionResult:
        return invert_blue_at(self.bsum, complex(x, y), seed=self.seed)

    def __call__(self, x: float, y: float) -> complex:
        return self.solve(x, y).greens


def density_with_diagnostic(greens_map: GreensMap, x: float, y: float,
                            h: float = DENSITY_STEP) -> Tuple[float, float]:
    """
    (1/pi) dG/dconj(z) on a 4-point central stencil

    Returns:
        (rho, imaginary part); the imaginary part vanishes for an exact G

    Raises:
        StencilFailure: a stencil point could not be evaluated
    """
    points = [(x + h, y), (x - h, y), (x, y + h), (x, y - h)]
    values = []
    for px, py in points:
        try:
            values.append(complex(greens_map(px, py)))
        except FRVError as e:
            raise StencilFailure(f"stencil point ({px}, {py}) failed: {e}") from e
    dg_dx = (values[0] - values[1]) / (2.0 * h)
    dg_dy = (values[2] - values[3]) / (2.0 * h)
    rho = (dg_dx.real - dg_dy.imag) / (2.0 * math.pi)
    imaginary = (dg_dx.imag + dg_dy.real) / (2.0 * math.pi)
    return rho, imaginary


def density_from_greens(greens_map: GreensMap, x: float, y: float, h: float = DENSITY_STEP) -> float:
    """Density rho(x, y) by finite differences; logs a warning on a large imaginary part"""
    rho, imaginary = density_with_diagnostic(greens_map, x, y, h)
    if abs(imaginary) >= IMAGINARY_DIAGNOSTIC_LIMIT:
        logger.warning(f"density stencil at ({x:.6g}, {y:.6g}) has imaginary part {imaginary:.3e}")
    return rho


def newton_density_at(bsum: BlueSum, z: complex, seed: Optional[Quaternion] = None,
                      h: float = DENSITY_STEP) -> Tuple[InversionResult, float]:
    """Solve at z, then differentiate with stencil points seeded by that solution"""
    centre = invert_blue_at(bsum, z, seed=seed)
    greens_map = NewtonGreensMap(bsum, seed=centre.q)
    return centre, density_from_greens(greens_map, z.real, z.imag, h)


def borderline_scan(bsum: BlueSum, origin: complex, direction: complex,
                    tol: float = INSIDE_TOLERANCE, r_max: float = 8.0,
                    samples: int = 200, precision: float = 1e-9) -> float:
    """
    Radius along a ray where |b|^2 drops through tol (outermost crossing)

    The ray origin + t*direction is sampled at samples+1 points on
    [0, r_max]; the outermost inside-to-outside transition is refined by
    bisection with continuation seeds from the inside end.

    Raises:
        NoBracket: no inside-to-outside transition on the sampled ray
    """
    direction = complex(direction)
    if direction == 0:
        raise ValueError("ray direction must be non-zero")
    direction /= abs(direction)
    origin = complex(origin)

    def classify(t: float, seed: Optional[Quaternion]) -> Tuple[bool, Optional[Quaternion]]:
        try:
            result = invert_blue_at(bsum, origin + t * direction, seed=seed)
        except NoConvergence:
            return False, None
        return result.corr > tol, result.q

    radii = np.linspace(0.0, r_max, samples + 1)
    inside_flags = []
    solutions: List[Optional[Quaternion]] = []
    seed = None
    for t in radii:
        inside, q = classify(float(t), seed)
        inside_flags.append(inside)
        solutions.append(q)
        seed = q if q is not None else seed

    crossing = None
    for k in range(samples - 1, -1, -1):
        if inside_flags[k] and not inside_flags[k + 1]:
            crossing = k
            break
    if crossing is None:
        raise NoBracket(f"no borderline crossing along ray origin={origin}, direction={direction} "
                        f"within r_max={r_max}")

    lo, hi = float(radii[crossing]), float(radii[crossing + 1])
    lo_seed = solutions[crossing]
    while hi - lo > precision:
        mid = 0.5 * (lo + hi)
        inside, q = classify(mid, lo_seed)
        if inside:
            lo, lo_seed = mid, q
        else:
            hi = mid
    radius = 0.5 * (lo + hi)
    logger.debug(f"borderline of {bsum.describe()} along {direction} at radius {radius:.9f}")
    return radius


@dataclass
class GridSolution:
    """Row-major results of a grid sweep; rows follow ys, columns follow xs"""
    xs: np.ndarray
    ys: np.ndarray
    greens: np.ndarray
    corr: np.ndarray
    density: np.ndarray
    converged: np.ndarray
    residual: np.ndarray
    failures: List[Tuple[float, float, str]] = field(default_factory=list)

    @property
    def all_converged(self) -> bool:
        return bool(np.all(self.converged))


def _solve_row(bsum: BlueSum, xs: np.ndarray, y: float, with_density: bool, h: float):
    count = len(xs)
    greens = np.full(count, np.nan + 1j * np.nan, dtype=complex)
    corr = np.full(count, np.nan)
    density = np.full(count, np.nan)
    converged = np.zeros(count, dtype=bool)
    residual = np.full(count, np.inf)
    failures = []
    seed = None
    for i, x in enumerate(xs):
        z = complex(float(x), y)
        try:
            if with_density:
                result, rho = newton_density_at(bsum, z, seed=seed, h=h)
                density[i] = rho
            else:
                result = invert_blue_at(bsum, z, seed=seed)
        except NoConvergence as e:
            residual[i] = e.best_residual
            failures.append((float(x), y, str(e)))
            continue
        except StencilFailure as e:
            failures.append((float(x), y, str(e)))
            continue
        greens[i] = result.greens
        corr[i] = result.corr
        converged[i] = result.converged
        residual[i] = result.residual
        seed = result.q
    return greens, corr, density, converged, residual, failures


def solve_grid(bsum: BlueSum, xs: Sequence[float], ys: Sequence[float],
               with_density: bool = False, h: float = DENSITY_STEP, threads: int = 1) -> GridSolution:
    """
    Invert the addition law on a rectangular grid

    Each row is an independent sweep in x with continuation seeding, so the
    result does not depend on the number of worker threads.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    logger.info(f"solving {bsum.describe()} on a {len(xs)}x{len(ys)} grid with {threads} thread(s)")

    def work(y):
        return _solve_row(bsum, xs, float(y), with_density, h)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            rows = list(executor.map(work, ys))
    else:
        rows = [work(y) for y in ys]

    solution = GridSolution(
        xs=xs, ys=ys,
        greens=np.array([r[0] for r in rows]),
        corr=np.array([r[1] for r in rows]),
        density=np.array([r[2] for r in rows]),
        converged=np.array([r[3] for r in rows]),
        residual=np.array([r[4] for r in rows]),
        failures=[f for r in rows for f in r[5]],
    )
    if solution.failures:
        logger.warning(f"{len(solution.failures)} grid point(s) did not converge")
    return solution
