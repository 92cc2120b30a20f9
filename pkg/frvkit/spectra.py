#!/usr/bin/env python3
"""
FRVKit Spectra
Eigen-decomposition front end, density histograms, eigenvector overlaps and
theory-versus-sample comparison reports
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

try:
    from .closed_models import (CueGue, CueSum, EllipseWithOptionalHole, ModelSpec,
                                cue_sum_cdf, cue_sum_correlator, cue_sum_quantile,
                                model_border, model_density, radial_mass)
    from .errors import ConvergenceFailure, EmptyCloud, IllConditionedEigenbasis, NonFiniteValue
except ImportError:
    from closed_models import (CueGue, CueSum, EllipseWithOptionalHole, ModelSpec,
                               cue_sum_cdf, cue_sum_correlator, cue_sum_quantile,
                               model_border, model_density, radial_mass)
    from errors import ConvergenceFailure, EmptyCloud, IllConditionedEigenbasis, NonFiniteValue

logger = logging.getLogger(__name__)

REPORT_SCHEMA = 'frv-report/1'
BORDER_INFLATION = 1.05
HOLE_SHRINK = 0.95
EDGE_LAYER_SPACINGS = 1.5
RADIAL_BINS = 10
PLANAR_BINS = 40
EIGEN_RESIDUAL_TOLERANCE = 1e-8
OVERLAP_CONDITION_LIMIT = 1e12


class RunStatus:
    """Status of a validation, report, suite or run"""
    PASS = 'pass'
    FAIL = 'fail'
    WARNING = 'warning'
    ERROR = 'error'


def eig_general(a: np.ndarray, verify: bool = True, checks: int = 5) -> np.ndarray:
    """
    Eigenvalues of a general complex matrix (LAPACK Hessenberg + shifted QR)

    Args:
        a: square matrix with finite entries
        verify: check ||A v - lambda v|| <= 1e-8 ||A||_F for `checks` eigenpairs
        checks: number of eigenpairs checked, evenly spaced in solver order

    Raises:
        ConvergenceFailure: LAPACK failure or a failed residual check
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"eig_general needs a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteValue("matrix has non-finite entries")

    try:
        if not verify:
            return np.linalg.eigvals(a)
        values, vectors = np.linalg.eig(a)
    except np.linalg.LinAlgError as e:
        raise ConvergenceFailure(f"eigensolver did not converge: {e}") from e

    norm = np.linalg.norm(a)
    n = a.shape[0]
    indices = np.unique(np.linspace(0, n - 1, min(checks, n)).astype(int))
    for k in indices:
        v = vectors[:, k]
        residual = np.linalg.norm(a @ v - values[k] * v) / max(np.linalg.norm(v), 1e-300)
        if residual > EIGEN_RESIDUAL_TOLERANCE * max(norm, 1e-300):
            raise ConvergenceFailure(f"eigenpair {k} residual {residual:.3e} exceeds "
                                     f"{EIGEN_RESIDUAL_TOLERANCE:g}*||A|| = {EIGEN_RESIDUAL_TOLERANCE * norm:.3e}")
    return values


@dataclass
class HistogramRadial:
    """Shell counts with per-area density counts/(total * pi (r2^2 - r1^2))"""
    edges: np.ndarray
    counts: np.ndarray
    total: int

    @property
    def areas(self) -> np.ndarray:
        return np.pi * (self.edges[1:] ** 2 - self.edges[:-1] ** 2)

    @property
    def density(self) -> np.ndarray:
        return self.counts / (self.total * self.areas)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def mass(self) -> float:
        return float(np.sum(self.density * self.areas))


@dataclass
class Histogram2D:
    """Cell counts on a rectangle; counts[iy, ix]"""
    x_edges: np.ndarray
    y_edges: np.ndarray
    counts: np.ndarray
    total: int

    @property
    def cell_area(self) -> float:
        return float((self.x_edges[1] - self.x_edges[0]) * (self.y_edges[1] - self.y_edges[0]))

    @property
    def density(self) -> np.ndarray:
        return self.counts / (self.total * self.cell_area)

    @property
    def mass(self) -> float:
        return float(np.sum(self.density) * self.cell_area)


def radial_histogram(points: np.ndarray, r_max: float, bins: int) -> HistogramRadial:
    radii = np.abs(np.asarray(points))
    edges = np.linspace(0.0, r_max, bins + 1)
    counts, _ = np.histogram(radii, bins=edges)
    return HistogramRadial(edges, counts.astype(float), int(radii.size))


def planar_histogram(points: np.ndarray, bounds: Tuple[float, float, float, float], bins: int) -> Histogram2D:
    points = np.asarray(points)
    x0, x1, y0, y1 = bounds
    # rows follow y
    counts, y_edges, x_edges = np.histogram2d(points.imag, points.real, bins=bins,
                                              range=[[y0, y1], [x0, x1]])
    return Histogram2D(x_edges, y_edges, counts, int(points.size))


@dataclass
class ComparisonReport:
    """Discrepancy between a sampled cloud and the analytic density"""
    kind: str
    model: str
    l1_distance: float
    max_bin_deviation: float
    outside_fraction: float
    inside_hole_fraction: Optional[float]
    bins: int
    point_count: int
    max_density: float = 0.0
    origin_density: Optional[float] = None
    origin_theory: Optional[float] = None
    origin_bin_deviation: Optional[float] = None
    border_estimate: Optional[float] = None
    edge_margin: float = 0.0
    config: Dict[str, Any] = field(default_factory=dict)
    validations: List[Dict[str, Any]] = field(default_factory=list)
    status: str = 'unknown'

    def to_dict(self) -> Dict[str, Any]:
        return {
            'schema': REPORT_SCHEMA,
            'kind': self.kind,
            'model': self.model,
            'status': self.status,
            'l1Distance': self.l1_distance,
            'maxBinDeviation': self.max_bin_deviation,
            'outsideFraction': self.outside_fraction,
            'insideHoleFraction': self.inside_hole_fraction,
            'bins': self.bins,
            'pointCount': self.point_count,
            'maxDensity': self.max_density,
            'originDensity': self.origin_density,
            'originTheory': self.origin_theory,
            'originBinDeviation': self.origin_bin_deviation,
            'borderEstimate': self.border_estimate,
            'edgeMargin': self.edge_margin,
            'config': self.config,
            'validations': self.validations,
        }


@dataclass
class ReportThresholds:
    """Pass limits for a comparison report; None disables a check"""
    max_l1: Optional[float] = None
    max_outside_fraction: Optional[float] = None
    max_hole_fraction: Optional[float] = None
    max_relative_bin_deviation: Optional[float] = None
    origin_relative_tolerance: Optional[float] = None
    border_radius: Optional[float] = None
    border_tolerance: Optional[float] = None


def validate_report(report: ComparisonReport, thresholds: ReportThresholds) -> ComparisonReport:
    """Fill report.validations and report.status from the thresholds"""
    validations = []

    def check(metric, actual, limit, description, passed):
        validations.append({
            'metric': metric,
            'actual': actual,
            'expected_max': limit,
            'status': RunStatus.PASS if passed else RunStatus.FAIL,
            'description': description,
        })

    if thresholds.max_l1 is not None:
        check('l1_distance', report.l1_distance, thresholds.max_l1,
              'L1 distance between sampled and analytic density',
              report.l1_distance <= thresholds.max_l1)
    if thresholds.max_outside_fraction is not None:
        check('outside_fraction', report.outside_fraction, thresholds.max_outside_fraction,
              f'Fraction of eigenvalues beyond the {BORDER_INFLATION}-inflated border '
              f'(edge margin {report.edge_margin:.3g})',
              report.outside_fraction <= thresholds.max_outside_fraction)
    if thresholds.max_hole_fraction is not None and report.inside_hole_fraction is not None:
        check('inside_hole_fraction', report.inside_hole_fraction, thresholds.max_hole_fraction,
              f'Fraction of eigenvalues inside {HOLE_SHRINK} of the hole radius '
              f'less the edge margin {report.edge_margin:.3g}',
              report.inside_hole_fraction <= thresholds.max_hole_fraction)
    if thresholds.max_relative_bin_deviation is not None:
        limit = thresholds.max_relative_bin_deviation * report.max_density
        check('max_bin_deviation', report.max_bin_deviation, limit,
              'Largest cell deviation away from the border, relative to the peak density',
              report.max_bin_deviation <= limit)
    if thresholds.origin_relative_tolerance is not None and report.origin_bin_deviation is not None:
        check('origin_relative_deviation', abs(report.origin_bin_deviation),
              thresholds.origin_relative_tolerance,
              'Relative deviation of the density near the origin',
              abs(report.origin_bin_deviation) <= thresholds.origin_relative_tolerance)
    if thresholds.border_radius is not None and thresholds.border_tolerance is not None \
            and report.border_estimate is not None:
        deviation = abs(report.border_estimate - thresholds.border_radius)
        check('border_radius_deviation', deviation, thresholds.border_tolerance,
              f'Border radius estimated from the cloud versus {thresholds.border_radius:g}',
              deviation <= thresholds.border_tolerance)

    report.validations = validations
    report.status = RunStatus.FAIL if any(v['status'] == RunStatus.FAIL for v in validations) else RunStatus.PASS
    return report


def _cloud_points(cloud) -> np.ndarray:
    points = np.asarray(getattr(cloud, 'points', cloud), dtype=complex)
    if points.size == 0:
        raise EmptyCloud("comparison needs at least one eigenvalue")
    return points


def _cloud_config(cloud) -> Dict[str, Any]:
    config = getattr(cloud, 'config', None)
    return config.to_dict() if config is not None and hasattr(config, 'to_dict') else {}


def estimate_border_radius(points: np.ndarray, model: CueSum, quantile: float = 0.95) -> float:
    """
    Border radius from the empirical radial quantile

    The quantile radius is divided by the analytic ratio quantile/border,
    which leaves the estimate insensitive to finite-N smearing at the edge.
    """
    radii = np.abs(np.asarray(points))
    if radii.size == 0:
        raise EmptyCloud("border estimate needs at least one eigenvalue")
    ratio = float(cue_sum_quantile(model.m, 1.0, quantile)) / math.sqrt(model.m)
    return float(np.quantile(radii, quantile)) / ratio


def radial_compare(cloud, model: ModelSpec, bins: int = RADIAL_BINS, r_max: Optional[float] = None,
                   origin_fraction: float = 0.25) -> ComparisonReport:
    """
    Radial density comparison for circularly symmetric models

    Shell theory values are exact shell masses from the radial CDF. Mass
    beyond r_max counts fully towards the L1 distance.

    Raises:
        EmptyCloud: no points
    """
    if not isinstance(model, CueSum):
        raise ValueError(f"radial comparison needs a circularly symmetric model, got {model}")
    points = _cloud_points(cloud)
    border = model.border_radius
    r_max = r_max or BORDER_INFLATION * border

    hist = radial_histogram(points, r_max, bins)
    cdf = cue_sum_cdf(model.m, model.scale, hist.edges)
    theory = np.diff(cdf) / hist.areas
    deviation = np.abs(hist.density - theory)
    beyond = float(np.mean(np.abs(points) > r_max))
    l1 = float(np.sum(deviation * hist.areas)) + beyond

    radii = np.abs(points)
    r0 = origin_fraction * border
    origin_density = float(np.sum(radii < r0)) / (radii.size * math.pi * r0 * r0)
    origin_theory = float(cue_sum_cdf(model.m, model.scale, r0)) / (math.pi * r0 * r0)

    report = ComparisonReport(
        kind='radial',
        model=model.label,
        l1_distance=l1,
        max_bin_deviation=float(np.max(deviation)),
        outside_fraction=float(np.mean(radii > BORDER_INFLATION * border)),
        inside_hole_fraction=None,
        bins=bins,
        point_count=int(points.size),
        max_density=float(np.max(theory)),
        origin_density=origin_density,
        origin_theory=origin_theory,
        origin_bin_deviation=(origin_density - origin_theory) / origin_theory,
        border_estimate=estimate_border_radius(points, model),
        config=_cloud_config(cloud),
    )
    logger.info(f"radial comparison for {model.label}: l1={l1:.4f}, outside={report.outside_fraction:.4f}")
    return report


def _cell_theory(model: ModelSpec, hist: Histogram2D, subsamples: int):
    """Cell-averaged analytic density and a mask of cells cut by the border"""
    nx = hist.x_edges.size - 1
    ny = hist.y_edges.size - 1
    dx = hist.x_edges[1] - hist.x_edges[0]
    dy = hist.y_edges[1] - hist.y_edges[0]
    offsets = (np.arange(subsamples) + 0.5) / subsamples
    xs = (hist.x_edges[:-1, None] + dx * offsets[None, :]).ravel()
    ys = (hist.y_edges[:-1, None] + dy * offsets[None, :]).ravel()
    gx, gy = np.meshgrid(xs, ys)
    rho = model_density(model, gx, gy)
    support = model_border(model).contains(gx, gy)

    shape = (ny, subsamples, nx, subsamples)
    theory = np.nanmean(rho.reshape(shape), axis=(1, 3))
    inside_count = support.reshape(shape).sum(axis=(1, 3))
    cut = (inside_count > 0) & (inside_count < subsamples * subsamples)
    return theory, cut


def support_area(border) -> float:
    sx, sy = border.extent
    hole = getattr(border, 'hole_radius', None) or 0.0
    return math.pi * (sx * sy - hole * hole)


def finite_size_margin(model: ModelSpec, n: Optional[int]) -> float:
    """
    Width of the edge layer of an n x n sample: EDGE_LAYER_SPACINGS mean
    eigenvalue spacings sqrt(area / n). Zero when n is unknown.
    """
    if not n:
        return 0.0
    return EDGE_LAYER_SPACINGS * math.sqrt(support_area(model_border(model)) / n)


def _outside_fraction(points: np.ndarray, model: ModelSpec, margin: float = 0.0) -> float:
    border = model_border(model)
    sx, sy = border.extent
    # semi-axes grow by the margin, then by the relative inflation
    scaled = np.square(points.real / (sx + margin)) + np.square(points.imag / (sy + margin))
    return float(np.mean(scaled >= BORDER_INFLATION * BORDER_INFLATION))


def _hole_fraction(points: np.ndarray, border: EllipseWithOptionalHole, margin: float = 0.0) -> float:
    radius = max(HOLE_SHRINK * border.hole_radius - margin, 0.0)
    return float(np.mean(np.abs(points) < radius))


def planar_compare(cloud, model: ModelSpec, bins: int = PLANAR_BINS, extent_factor: float = 1.1,
                   subsamples: int = 8, edge_margin: Optional[float] = None) -> ComparisonReport:
    """
    Two-dimensional cell density comparison for any model

    maxBinDeviation ignores cells cut by the border, where a cell average of
    a discontinuous density is not meaningful. The outside and hole fractions
    tolerate an edge layer of width edge_margin; by default it is
    finite_size_margin for the cloud's matrix size, zero for a bare array.

    Raises:
        EmptyCloud: no points
    """
    points = _cloud_points(cloud)
    if edge_margin is None:
        edge_margin = finite_size_margin(model, getattr(getattr(cloud, 'config', None), 'n', None))
    border = model_border(model)
    sx, sy = border.extent
    bounds = (-extent_factor * sx, extent_factor * sx, -extent_factor * sy, extent_factor * sy)
    hist = planar_histogram(points, bounds, bins)
    theory, cut = _cell_theory(model, hist, subsamples)

    deviation = np.abs(hist.density - theory)
    captured = hist.counts.sum() / points.size
    l1 = float(np.nansum(deviation) * hist.cell_area) + float(1.0 - captured)
    clean = np.where(cut, 0.0, deviation)

    hole_fraction = None
    if isinstance(model, CueGue) and model.p < 1.0 and isinstance(border, EllipseWithOptionalHole):
        hole_fraction = _hole_fraction(points, border, edge_margin)

    report = ComparisonReport(
        kind='planar',
        model=model.label,
        l1_distance=l1,
        max_bin_deviation=float(np.nanmax(clean)),
        outside_fraction=_outside_fraction(points, model, edge_margin),
        inside_hole_fraction=hole_fraction,
        bins=bins,
        point_count=int(points.size),
        max_density=float(np.nanmax(theory)),
        edge_margin=edge_margin,
        config=_cloud_config(cloud),
    )
    if isinstance(model, CueSum):
        report.border_estimate = estimate_border_radius(points, model)
    logger.info(f"planar comparison for {model.label}: l1={l1:.4f}, outside={report.outside_fraction:.4f}, "
                f"hole={hole_fraction}, edge margin={edge_margin:.3f}")
    return report


def overlap_correlator(a: np.ndarray, cond_limit: float = OVERLAP_CONDITION_LIMIT,
                       strict: bool = True) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigenvalues and diagonal overlaps O_i = (L_i L_i^dagger)(R_i^dagger R_i)

    Right eigenvectors R_i are the columns of V and left eigenvectors L_i the
    rows of V^-1, so L_i R_j = delta_ij.

    Raises:
        IllConditionedEigenbasis: cond(V) > cond_limit (strict mode; otherwise logged)
    """
    a = np.asarray(a, dtype=complex)
    values, right = np.linalg.eig(a)
    condition = float(np.linalg.cond(right))
    if not np.isfinite(condition) or condition > cond_limit:
        message = f"eigenvector matrix condition {condition:.3e} exceeds {cond_limit:.1e}"
        if strict:
            raise IllConditionedEigenbasis(message, condition)
        logger.warning(message)
    left = np.linalg.solve(right, np.eye(a.shape[0], dtype=complex))
    overlaps = np.sum(np.abs(left) ** 2, axis=1) * np.sum(np.abs(right) ** 2, axis=0)
    return values, overlaps


def overlap_compare(eigenvalues: np.ndarray, overlaps: np.ndarray, n: int, model: CueSum,
                    bins: int = 20) -> Dict[str, Any]:
    """
    Binned overlap density versus -C/pi

    Overlaps grow linearly with n, so the estimator per shell is
    sum O_i / (n * pointCount * shellArea).
    """
    if not isinstance(model, CueSum):
        raise ValueError("overlap comparison is defined for circularly symmetric models")
    eigenvalues = np.asarray(eigenvalues)
    overlaps = np.asarray(overlaps, dtype=float)
    if eigenvalues.size == 0:
        raise EmptyCloud("overlap comparison needs at least one eigenvalue")
    border = model.border_radius
    edges = np.linspace(0.0, border, bins + 1)
    sums, _ = np.histogram(np.abs(eigenvalues), bins=edges, weights=overlaps)
    areas = np.pi * (edges[1:] ** 2 - edges[:-1] ** 2)
    estimate = sums / (n * eigenvalues.size * areas)

    t, w = np.polynomial.legendre.leggauss(8)
    theory = np.empty(bins)
    for k in range(bins):
        r1, r2 = edges[k], edges[k + 1]
        r = 0.5 * (r2 - r1) * (t + 1.0) + r1
        shell = 0.5 * (r2 - r1) * np.sum(w * 2.0 * r * cue_sum_correlator(model.m, model.scale, r))
        theory[k] = shell / areas[k]

    theory_integral = radial_mass(lambda r: cue_sum_correlator(model.m, model.scale, r) / math.pi, border)
    estimate_integral = float(np.sum(overlaps[np.abs(eigenvalues) <= border]) / (n * eigenvalues.size))
    return {
        'edges': edges.tolist(),
        'estimate': estimate.tolist(),
        'theory': theory.tolist(),
        'l1_distance': float(np.sum(np.abs(estimate - theory) * areas)),
        'estimate_integral': estimate_integral,
        'theory_integral': theory_integral,
    }


def sample_cue_sum_synthetic(model: CueSum, count: int, rng: np.random.Generator) -> np.ndarray:
    """Points drawn exactly from the CUE-sum density (inverse radial CDF, uniform angle)"""
    radius = cue_sum_quantile(model.m, model.scale, rng.random(count))
    angle = 2.0 * np.pi * rng.random(count)
    return radius * np.exp(1j * angle)


def sample_uniform_disc(radius: float, count: int, rng: np.random.Generator) -> np.ndarray:
    return radius * np.sqrt(rng.random(count)) * np.exp(2j * np.pi * rng.random(count))
