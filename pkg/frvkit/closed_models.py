#!/usr/bin/env python3
"""
FRVKit Closed Models
Closed-form solutions of the solved models

- CueSum: scale * (U_1 + ... + U_M), M free CUE matrices
- CueGue: U + p*H, U from the CUE and H from the GUE

Each model provides the non-holomorphic Green's function, the eigenvector
correlator -C = |b|^2, the density and the borderline.
"""

import cmath
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

try:
    from .addition_engine import BlueSum, newton_density_at
    from .errors import (DenominatorCollapse, DensityDenominatorZero, FRVError,
                         NoValidRoot, PolePoint)
    from .green_blue import g_cue
    from .quaternion import Quaternion
except ImportError:
    from addition_engine import BlueSum, newton_density_at
    from errors import (DenominatorCollapse, DensityDenominatorZero, FRVError,
                        NoValidRoot, PolePoint)
    from green_blue import g_cue
    from quaternion import Quaternion

logger = logging.getLogger(__name__)

REAL_ROOT_TOLERANCE = 1e-10
POSITIVE_B2_TOLERANCE = 1e-10
DENOMINATOR_TOLERANCE = 1e-12
# below this |x| the imaginary-axis limit formulas are used
AXIS_TOLERANCE = 1e-7


# Model and border descriptions

@dataclass(frozen=True)
class CueSum:
    """scale * (U_1 + ... + U_M); scale = r_inf/sqrt(M) is the diffusion normalization"""
    m: int = 2
    scale: float = 1.0

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ValueError(f"CueSum needs an integer M >= 2, got {self.m}")
        if not self.scale > 0:
            raise ValueError(f"CueSum scale must be positive, got {self.scale}")

    @classmethod
    def diffusion(cls, m: int, r_inf: float = 1.0) -> 'CueSum':
        return cls(m, r_inf / math.sqrt(m))

    @property
    def border_radius(self) -> float:
        return self.scale * math.sqrt(self.m)

    @property
    def label(self) -> str:
        if self.scale == 1.0:
            return 'cue+cue' if self.m == 2 else f"mcue:{self.m}"
        return f"mcue:{self.m}@{self.scale:.17g}"


@dataclass(frozen=True)
class CueGue:
    """U + p*H; only p^2 enters the formulas"""
    p: float

    def __post_init__(self):
        if not (self.p >= 0 and math.isfinite(self.p)):
            raise ValueError(f"CueGue needs p >= 0, got {self.p}")

    @property
    def label(self) -> str:
        return f"cue+gue:{self.p:g}"


ModelSpec = Union[CueSum, CueGue]


@dataclass(frozen=True)
class Circle:
    radius: float

    def contains(self, x, y, inflate: float = 1.0):
        return np.hypot(x, y) < inflate * self.radius

    def curves(self, points: int = 720) -> List[Tuple[np.ndarray, np.ndarray]]:
        theta = np.linspace(0.0, 2.0 * np.pi, points)
        return [(self.radius * np.cos(theta), self.radius * np.sin(theta))]

    @property
    def extent(self) -> Tuple[float, float]:
        return self.radius, self.radius


@dataclass(frozen=True)
class EllipseWithOptionalHole:
    """Outer ellipse A x^2 + B y^2 = 1 and, for p <= 1, an inner circle"""
    a_coef: float
    b_coef: float
    hole_radius: Optional[float] = None

    @property
    def semi_axes(self) -> Tuple[float, float]:
        return 1.0 / math.sqrt(self.a_coef), 1.0 / math.sqrt(self.b_coef)

    @property
    def extent(self) -> Tuple[float, float]:
        return self.semi_axes

    def in_ellipse(self, x, y, inflate: float = 1.0):
        """Inside the ellipse with semi-axes multiplied by inflate"""
        return self.a_coef * np.square(x) + self.b_coef * np.square(y) < inflate * inflate

    def in_hole(self, x, y, shrink: float = 1.0):
        if self.hole_radius is None:
            return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape, dtype=bool)
        return np.hypot(x, y) < shrink * self.hole_radius

    def contains(self, x, y, inflate: float = 1.0):
        return np.logical_and(self.in_ellipse(x, y, inflate), np.logical_not(self.in_hole(x, y, 1.0 / inflate)))

    def curves(self, points: int = 720) -> List[Tuple[np.ndarray, np.ndarray]]:
        theta = np.linspace(0.0, 2.0 * np.pi, points)
        sx, sy = self.semi_axes
        result = [(sx * np.cos(theta), sy * np.sin(theta))]
        if self.hole_radius:
            result.append((self.hole_radius * np.cos(theta), self.hole_radius * np.sin(theta)))
        return result


BorderSpec = Union[Circle, EllipseWithOptionalHole]


@dataclass
class CubicSolution:
    """Real unknowns of the CUE+pGUE solution at one point"""
    omega: float
    omega_prime: float
    alpha: float
    b_squared: float
    roots_considered: List[float] = field(default_factory=list)
    branch: str = 'inside'

    @property
    def greens(self) -> complex:
        return complex(self.omega, self.omega_prime)


@dataclass
class SolutionPoint:
    """Analytic output at z"""
    z: complex
    greens: complex
    corr: float
    density: float
    inside: bool
    source: str = 'closed'
    cauchy_residual: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            'x': self.z.real,
            'y': self.z.imag,
            'rho': self.density,
            'reG': self.greens.real,
            'imG': self.greens.imag,
            'negC': self.corr,
            'inside': self.inside,
            'source': self.source,
        }


# CUE sums

def cue_sum_solution(m: int, scale: float, z: complex) -> SolutionPoint:
    """
    Closed-form solution of scale * (U_1 + ... + U_M) at z

    Inside |z/scale| < sqrt(M), with w = z/scale:
        G = conj(w)(M-1)/(M^2 - |w|^2)/scale
        -C = M(M-1)(M - |w|^2)/(M^2 - |w|^2)^2/scale^2
        rho = M^2(M-1)/(pi (M^2 - |w|^2)^2)/scale^2
    Outside, G = 1/z (holomorphic branch) and -C = rho = 0.

    Raises:
        PolePoint: |z/scale| = M
    """
    z = complex(z)
    w = z / scale
    r = abs(w)
    if abs(r - m) < 1e-12 * m:
        raise PolePoint(f"|z/scale| = M = {m} is a pole of the CUE-sum formulas")
    r2 = r * r
    if r2 < m:
        denom = m * m - r2
        greens = w.conjugate() * (m - 1) / denom / scale
        corr = m * (m - 1) * (m - r2) / (denom * denom) / (scale * scale)
        rho = m * m * (m - 1) / (math.pi * denom * denom) / (scale * scale)
        return SolutionPoint(z, greens, corr, rho, True, 'closed')
    return SolutionPoint(z, 1.0 / z, 0.0, 0.0, False, 'holomorphic')


def cue_sum_density(m: int, scale: float, x, y) -> np.ndarray:
    """Vectorized CUE-sum density"""
    r2 = (np.square(x) + np.square(y)) / (scale * scale)
    denom = m * m - r2
    with np.errstate(divide='ignore', invalid='ignore'):
        rho = m * m * (m - 1) / (np.pi * denom * denom) / (scale * scale)
    return np.where(r2 < m, rho, 0.0)


def cue_sum_correlator(m: int, scale: float, r) -> np.ndarray:
    """Vectorized -C(|z| = r); zero outside the disc"""
    w2 = np.square(np.asarray(r, dtype=float) / scale)
    denom = m * m - w2
    with np.errstate(divide='ignore', invalid='ignore'):
        corr = m * (m - 1) * (m - w2) / (denom * denom) / (scale * scale)
    return np.where(w2 < m, corr, 0.0)


def cue_sum_border(m: int, scale: float = 1.0) -> Circle:
    return Circle(scale * math.sqrt(m))


def cue_sum_cdf(m: int, scale: float, r) -> np.ndarray:
    """Mass inside radius r: (M-1) w^2/(M^2 - w^2), w = r/scale, capped at 1"""
    w2 = np.square(np.asarray(r, dtype=float) / scale)
    w2 = np.minimum(w2, float(m))
    return (m - 1) * w2 / (m * m - w2)


def cue_sum_quantile(m: int, scale: float, fraction) -> np.ndarray:
    """Inverse of cue_sum_cdf"""
    f = np.asarray(fraction, dtype=float)
    return scale * np.sqrt(m * m * f / (m - 1 + f))


# CUE + pGUE

def cue_gue_border(p: float) -> EllipseWithOptionalHole:
    """
    Outer ellipse ((1+p^2)/(1+2p^2)^2) x^2 + (1+p^2) y^2 = 1; hole x^2 + y^2 = 1 - p^2 for p <= 1
    """
    if p < 0:
        raise ValueError(f"p must be non-negative, got {p}")
    p2 = p * p
    hole = math.sqrt(1.0 - p2) if p <= 1.0 else None
    return EllipseWithOptionalHole((1.0 + p2) / (1.0 + 2.0 * p2) ** 2, 1.0 + p2, hole)


def cue_gue_cubic_coefficients(x: float, y: float, p: float) -> np.ndarray:
    """Coefficients of the cubic in omega, highest power first"""
    p2 = p * p
    return np.array([
        -4.0 * p2 ** 3,
        8.0 * p2 * p2 * x,
        p2 * (1.0 - 2.0 * p2 - 5.0 * x * x - y * y),
        (p2 - 1.0) * x + x ** 3 + x * y * y,
    ])


def cue_gue_cubic_residual(omega, x, y, p):
    p2 = p * p
    return ((p2 - 1.0) * x + x ** 3 + x * y * y
            + p2 * (1.0 - 2.0 * p2 - 5.0 * x * x - y * y) * omega
            + 8.0 * p2 * p2 * x * omega ** 2 - 4.0 * p2 ** 3 * omega ** 3)


def _cubic_slope(omega, x, y, p):
    """d(cubic)/d(omega)"""
    p2 = p * p
    return p2 * (1.0 - 2.0 * p2 - 5.0 * x * x - y * y) + 16.0 * p2 * p2 * x * omega - 12.0 * p2 ** 3 * omega ** 2


def _polish(omega, x, y, p, steps: int = 2):
    for _ in range(steps):
        slope = _cubic_slope(omega, x, y, p)
        with np.errstate(divide='ignore', invalid='ignore'):
            update = np.where(slope != 0, cue_gue_cubic_residual(omega, x, y, p) / np.where(slope != 0, slope, 1.0), 0.0)
        omega = omega - update
    return omega


def _generic_quantities(x, y, p, omega):
    """
    omega', alpha and |b|^2 off the imaginary axis

    |b|^2 p^4 = (x/omega - 3p^2) alpha + p^2 - 1 with x alpha/omega expanded
    so that omega = 0 (the hole circle) stays regular.
    """
    p2 = p * p
    d = 2.0 * p2 * omega - x
    omega_prime = y * omega / d
    alpha = x * omega - y * omega_prime - p2 * (omega * omega - omega_prime * omega_prime)
    alpha_over_omega = x - y * y / d - p2 * omega + p2 * omega_prime * y / d
    b2 = (x * alpha_over_omega - 3.0 * p2 * alpha + p2 - 1.0) / (p2 * p2)
    return d, omega_prime, alpha, b2


def _axis_quantities(y, p):
    """Limit x -> 0 along the selected root omega ~ omega_x * x"""
    p2 = p * p
    f0 = p2 * (1.0 - 2.0 * p2 - y * y)
    omega_x = (1.0 - p2 - y * y) / f0
    den = 2.0 * p2 * omega_x - 1.0
    omega_prime = y * omega_x / den
    alpha = -y * omega_prime + p2 * omega_prime * omega_prime
    b2 = (alpha / omega_x - 3.0 * p2 * alpha + p2 - 1.0) / (p2 * p2)
    return f0, omega_x, den, omega_prime, alpha, b2


def _generic_density(x, y, p, omega, d):
    """rho = (1/2pi)(omega_x + x y omega_y/D^2 - omega/D) by implicit differentiation"""
    p2 = p * p
    f = _cubic_slope(omega, x, y, p)
    omega_x = (1.0 - p2 - 3.0 * x * x - y * y + 10.0 * p2 * x * omega - 8.0 * p2 * p2 * omega * omega) / f
    omega_y = 2.0 * y * (p2 * omega - x) / f
    return f, (omega_x + x * y * omega_y / (d * d) - omega / d) / (2.0 * math.pi)


def _axis_density(y, p):
    p2 = p * p
    f0, omega_x, den, _, _, _ = _axis_quantities(y, p)
    term = 2.0 * y * y * (p2 * omega_x - 1.0) / (f0 * den * den)
    return f0, (omega_x + term - omega_x / den) / (2.0 * math.pi)


def cue_gue_omega(x: float, y: float, p: float, hint: Optional[float] = None) -> CubicSolution:
    """
    Solve the CUE+pGUE cubic at (x, y) and select the physical root

    Real roots come from companion-matrix eigenvalues (|Im| < 1e-10),
    polished by two Newton steps. A root is physical when it gives
    |b|^2 > 1e-10; a unique such root means the point is inside. With none,
    the point is outside and the root closest to the border value
    x/(1 + 2p^2) is returned. Several positive roots are resolved by the
    continuation hint.

    Raises:
        DenominatorCollapse: 2p^2 omega - x vanishes for every real root
        NoValidRoot: several positive roots and no hint
    """
    if not p > 0:
        raise ValueError(f"cue_gue_omega needs p > 0, got {p}")
    x = float(x)
    y = float(y)

    if abs(x) < AXIS_TOLERANCE:
        try:
            _, _, _, omega_prime, alpha, b2 = _axis_quantities(y, p)
        except ZeroDivisionError as e:
            raise DenominatorCollapse(f"imaginary-axis limit undefined at y={y}, p={p}") from e
        roots = [0.0]
        radicand = (1.0 - 2.0 * p * p - y * y) / (4.0 * p ** 4)
        if radicand > 0:
            roots += [math.sqrt(radicand), -math.sqrt(radicand)]
        branch = 'inside' if b2 > POSITIVE_B2_TOLERANCE else ('border' if b2 > -POSITIVE_B2_TOLERANCE else 'outside')
        return CubicSolution(0.0, float(omega_prime), float(alpha), float(b2), roots, branch)

    raw = np.roots(cue_gue_cubic_coefficients(x, y, p))
    real_roots = [float(_polish(r.real, x, y, p)) for r in raw
                  if abs(r.imag) < REAL_ROOT_TOLERANCE * max(1.0, abs(r))]
    if not real_roots:
        real_roots = [float(_polish(raw[np.argmin(np.abs(raw.imag))].real, x, y, p))]

    candidates = []
    for omega in real_roots:
        if abs(2.0 * p * p * omega - x) < DENOMINATOR_TOLERANCE:
            continue
        _, omega_prime, alpha, b2 = _generic_quantities(x, y, p, omega)
        candidates.append(CubicSolution(omega, float(omega_prime), float(alpha), float(b2), real_roots))
    if not candidates:
        raise DenominatorCollapse(f"2p^2 omega - x vanishes at (x, y, p) = ({x}, {y}, {p})")

    positive = [c for c in candidates if c.b_squared > POSITIVE_B2_TOLERANCE]
    if len(positive) == 1:
        return positive[0]
    if len(positive) > 1:
        if hint is None:
            raise NoValidRoot(f"{len(positive)} roots with |b|^2 > 0 at ({x}, {y}, p={p}) and no continuation hint")
        chosen = min(positive, key=lambda c: abs(c.omega - hint))
        return chosen

    border_value = x / (1.0 + 2.0 * p * p)
    chosen = min(candidates, key=lambda c: abs(c.omega - border_value))
    chosen.branch = 'border' if abs(chosen.b_squared) <= POSITIVE_B2_TOLERANCE else 'outside'
    return chosen


def cue_gue_outer_greens(z: complex, p: float) -> complex:
    """Holomorphic G outside the ellipse: smaller root of p^2 G^2 - z G + 1 = 0"""
    z = complex(z)
    s = cmath.sqrt(z * z - 4.0 * p * p)
    if abs(z - s) > abs(z + s):
        s = -s
    return 2.0 / (z + s)


def cue_gue_solution(x: float, y: float, p: float, hint: Optional[float] = None,
                     check_cauchy: bool = False) -> SolutionPoint:
    """
    Closed-form solution of U + p*H at z = x + iy

    Outside the ellipse G is the holomorphic root continuous with 1/z; in
    the hole G = 0. Both carry source='holomorphic'. In the annulus
    G = omega + i*omega', -C = |b|^2 and rho comes from implicit
    differentiation of the cubic. Where its denominator vanishes rho is
    differentiated from the Newton-inverted sum instead (NoConvergence or
    StencilFailure propagate).

    Args:
        x, y: point
        p: GUE weight
        hint: omega at a neighbouring point, for tie-breaking
        check_cauchy: also report |d omega'/dx + d omega/dy| by finite differences
    """
    z = complex(x, y)
    if p == 0:
        return SolutionPoint(z, g_cue(z), 0.0, 0.0, False, 'holomorphic')

    border = cue_gue_border(p)
    if not border.in_ellipse(x, y):
        return SolutionPoint(z, cue_gue_outer_greens(z, p), 0.0, 0.0, False, 'holomorphic')
    if border.in_hole(x, y):
        return SolutionPoint(z, 0j, 0.0, 0.0, False, 'holomorphic')

    solution = cue_gue_omega(x, y, p, hint=hint)
    if solution.branch != 'inside':
        return SolutionPoint(z, solution.greens, 0.0, 0.0, False, 'closed')

    try:
        if abs(x) < AXIS_TOLERANCE:
            slope, rho = _axis_density(y, p)
        else:
            d = 2.0 * p * p * solution.omega - x
            slope, rho = _generic_density(x, y, p, solution.omega, d)
        if abs(slope) < DENOMINATOR_TOLERANCE:
            raise DensityDenominatorZero(f"cubic slope vanishes at ({x}, {y}, p={p})")
        rho = float(rho)
    except (DensityDenominatorZero, ZeroDivisionError) as e:
        logger.warning(f"analytic density unavailable at ({x}, {y}, p={p}): {e}; differentiating the Newton solution")
        seed = Quaternion(solution.greens, math.sqrt(max(solution.b_squared, 0.0)))
        _, rho = newton_density_at(BlueSum.cue_gue(p), z, seed=seed)

    point = SolutionPoint(z, solution.greens, solution.b_squared, rho, True, 'closed')
    if check_cauchy:
        point.cauchy_residual = cauchy_residual(x, y, p)
    return point


def cauchy_residual(x: float, y: float, p: float, h: float = 1e-5) -> float:
    """|d omega'/dx + d omega/dy| by central differences"""
    def solve(px, py):
        return cue_gue_omega(px, py, p)
    d_omega_prime_dx = (solve(x + h, y).omega_prime - solve(x - h, y).omega_prime) / (2.0 * h)
    d_omega_dy = (solve(x, y + h).omega - solve(x, y - h).omega) / (2.0 * h)
    return abs(d_omega_prime_dx + d_omega_dy)


def cue_gue_density(p: float, x, y) -> np.ndarray:
    """
    Vectorized CUE+pGUE density

    Batched companion-matrix roots; points with several admissible roots are
    set to NaN and logged.
    """
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    shape = x.shape
    x = x.ravel()
    y = y.ravel()
    rho = np.zeros(x.size)
    if p == 0:
        return rho.reshape(shape)

    border = cue_gue_border(p)
    active = border.in_ellipse(x, y) & ~border.in_hole(x, y)
    on_axis = active & (np.abs(x) < AXIS_TOLERANCE)
    generic = active & ~on_axis

    with np.errstate(divide='ignore', invalid='ignore'):
        if np.any(on_axis):
            ya = y[on_axis]
            _, _, _, _, _, b2 = _axis_quantities(ya, p)
            _, rho_axis = _axis_density(ya, p)
            rho[on_axis] = np.where(b2 > POSITIVE_B2_TOLERANCE, rho_axis, 0.0)

        if np.any(generic):
            xg, yg = x[generic], y[generic]
            p2 = p * p
            lead = -4.0 * p2 ** 3
            a2 = 8.0 * p2 * p2 * xg / lead
            a1 = p2 * (1.0 - 2.0 * p2 - 5.0 * xg * xg - yg * yg) / lead
            a0 = ((p2 - 1.0) * xg + xg ** 3 + xg * yg * yg) / lead
            companion = np.zeros((xg.size, 3, 3))
            companion[:, 0, 0] = -a2
            companion[:, 0, 1] = -a1
            companion[:, 0, 2] = -a0
            companion[:, 1, 0] = 1.0
            companion[:, 2, 1] = 1.0
            roots = np.linalg.eigvals(companion)

            is_real = np.abs(roots.imag) < REAL_ROOT_TOLERANCE * np.maximum(1.0, np.abs(roots))
            omega = _polish(roots.real, xg[:, None], yg[:, None], p)
            d, _, _, b2 = _generic_quantities(xg[:, None], yg[:, None], p, omega)
            admissible = is_real & (np.abs(d) >= DENOMINATOR_TOLERANCE) & (b2 > POSITIVE_B2_TOLERANCE)
            count = admissible.sum(axis=1)

            choice = np.argmax(admissible, axis=1)
            rows = np.arange(xg.size)
            omega_sel = omega[rows, choice]
            d_sel = d[rows, choice]
            _, rho_sel = _generic_density(xg, yg, p, omega_sel, d_sel)
            values = np.where(count == 1, rho_sel, 0.0)
            values = np.where(count > 1, np.nan, values)
            if np.any(count > 1):
                logger.warning(f"{int(np.sum(count > 1))} point(s) with ambiguous cubic roots for p={p}")
            rho[generic] = values

    return rho.reshape(shape)


# Model-level dispatch

def blue_sum_for(model: ModelSpec) -> BlueSum:
    """Free sum whose inversion reproduces the model numerically"""
    if isinstance(model, CueSum):
        return BlueSum.cue_sum(model.m, model.scale)
    return BlueSum.cue_gue(model.p)


def model_border(model: ModelSpec) -> BorderSpec:
    if isinstance(model, CueSum):
        return cue_sum_border(model.m, model.scale)
    return cue_gue_border(model.p)


def model_solution(model: ModelSpec, z: complex, hint: Optional[float] = None) -> SolutionPoint:
    if isinstance(model, CueSum):
        return cue_sum_solution(model.m, model.scale, z)
    return cue_gue_solution(z.real, z.imag, model.p, hint=hint)


def model_density(model: ModelSpec, x, y) -> np.ndarray:
    """Vectorized density of either model"""
    if isinstance(model, CueSum):
        return cue_sum_density(model.m, model.scale, np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return cue_gue_density(model.p, x, y)


@dataclass
class ModelGrid:
    """Closed-form grid; points[iy][ix] is None where the point failed"""
    xs: np.ndarray
    ys: np.ndarray
    points: List[List[Optional[SolutionPoint]]]
    failures: List[Tuple[float, float, str]] = field(default_factory=list)

    @property
    def all_solved(self) -> bool:
        return not self.failures

    def rows(self) -> List[dict]:
        return [p.to_dict() for row in self.points for p in row if p is not None]


def _solve_row(model: ModelSpec, xs: np.ndarray, y: float):
    row = []
    failures = []
    hint = None
    for x in xs:
        z = complex(float(x), y)
        try:
            point = model_solution(model, z, hint=hint)
        except PolePoint:
            # |z/scale| = M lies outside the disc, where G = 1/z holds
            point = SolutionPoint(z, 1.0 / z, 0.0, 0.0, False, 'holomorphic')
        except FRVError as e:
            logger.debug(f"closed-form failure at {z}: {e}")
            failures.append((float(x), y, str(e)))
            row.append(None)
            continue
        if point.inside:
            hint = point.greens.real
        row.append(point)
    return row, failures


def solve_model_grid(model: ModelSpec, xs: Sequence[float], ys: Sequence[float],
                     threads: int = 1) -> ModelGrid:
    """Closed-form solution on a grid; rows are independent continuation sweeps"""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    logger.info(f"closed-form solve of {model.label} on a {len(xs)}x{len(ys)} grid")

    def work(y):
        return _solve_row(model, xs, float(y))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            rows = list(executor.map(work, ys))
    else:
        rows = [work(y) for y in ys]
    grid = ModelGrid(xs, ys, [r[0] for r in rows], [f for r in rows for f in r[1]])
    if grid.failures:
        logger.warning(f"{len(grid.failures)} grid point(s) of {model.label} failed")
    return grid


def radial_mass(rho_of_r: Callable[[np.ndarray], np.ndarray], r_max: float, nodes: int = 64) -> float:
    """Integral of a radial density, 2 pi r rho(r) dr over [0, r_max], by Gauss-Legendre"""
    t, w = np.polynomial.legendre.leggauss(nodes)
    r = 0.5 * r_max * (t + 1.0)
    values = np.asarray(rho_of_r(r), dtype=float)
    return float(0.5 * r_max * np.sum(w * 2.0 * np.pi * r * values))


def total_mass(model: ModelSpec, radial_nodes: int = 96, angular_nodes: int = 256) -> float:
    """
    Integral of the analytic density over its support

    CueSum: radial Gauss-Legendre. CueGue: Gauss-Legendre in r times a
    uniform rule in theta, in elliptic-polar coordinates
    x = r cos(theta)/sqrt(A), y = r sin(theta)/sqrt(B), r from the hole to 1.
    """
    if isinstance(model, CueSum):
        return radial_mass(lambda r: cue_sum_density(model.m, model.scale, r, 0.0),
                           model.border_radius, radial_nodes)

    if model.p == 0:
        raise ValueError("the p = 0 model is a ring with no planar density")
    border = cue_gue_border(model.p)
    a, b = border.a_coef, border.b_coef
    theta = np.linspace(0.0, 2.0 * np.pi, angular_nodes, endpoint=False)
    hole = border.hole_radius or 0.0
    r_inner = hole / np.sqrt(np.cos(theta) ** 2 / a + np.sin(theta) ** 2 / b)
    t, w = np.polynomial.legendre.leggauss(radial_nodes)

    half = 0.5 * (1.0 - r_inner)
    r = r_inner[:, None] + half[:, None] * (t[None, :] + 1.0)
    x = r * np.cos(theta)[:, None] / math.sqrt(a)
    y = r * np.sin(theta)[:, None] / math.sqrt(b)
    rho = cue_gue_density(model.p, x, y)
    jacobian = r / math.sqrt(a * b)
    integrand = np.nansum(w[None, :] * rho * jacobian, axis=1) * half
    return float(np.sum(integrand) * 2.0 * np.pi / angular_nodes)
