#!/usr/bin/env python3
"""
FRVKit Verification Runner
Orchestrates the acceptance suites: Monte Carlo spectra against the analytic
densities, Newton inversion against the closed forms, and algebraic invariants
"""

import logging
import math
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime
from typing import Any, Callable, Dict, List, Optional

import numpy as np

try:
    from .addition_engine import density_from_greens, invert_blue_at
    from .closed_models import (AXIS_TOLERANCE, CueGue, CueSum, blue_sum_for, cue_gue_border,
                                model_solution, total_mass)
    from .ensembles import EnsembleConfig, model_matrix, realize_model, sample_cue, substream
    from .errors import FRVError, IllConditionedEigenbasis, NoConvergence
    from .green_blue import (GUE_GREENS, cue_quaternion_blue, cue_quaternion_green,
                             g_gue, hermitian_quaternion_green, unitary_u_pair)
    from .quaternion import Quaternion, q_mul
    from .spectra import (RADIAL_BINS, PLANAR_BINS, ReportThresholds, RunStatus, overlap_compare, overlap_correlator,
                          planar_compare, radial_compare, validate_report)
except ImportError:
    from addition_engine import density_from_greens, invert_blue_at
    from closed_models import (AXIS_TOLERANCE, CueGue, CueSum, blue_sum_for, cue_gue_border,
                               model_solution, total_mass)
    from ensembles import EnsembleConfig, model_matrix, realize_model, sample_cue, substream
    from errors import FRVError, IllConditionedEigenbasis, NoConvergence
    from green_blue import (GUE_GREENS, cue_quaternion_blue, cue_quaternion_green,
                            g_gue, hermitian_quaternion_green, unitary_u_pair)
    from quaternion import Quaternion, q_mul
    from spectra import (RADIAL_BINS, PLANAR_BINS, ReportThresholds, RunStatus, overlap_compare, overlap_correlator,
                         planar_compare, radial_compare, validate_report)

logger = logging.getLogger(__name__)


def _validation(metric: str, actual: float, expected_max: float, description: str) -> Dict[str, Any]:
    return {
        'metric': metric,
        'actual': float(actual),
        'expected_max': float(expected_max),
        'status': RunStatus.PASS if actual <= expected_max else RunStatus.FAIL,
        'description': description,
    }


class AcceptanceSuite:
    """Base class: subclasses fill validations and metrics in execute()"""

    title = 'acceptance suite'

    def run(self, options: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        options = dict(options or {})
        started = time.monotonic()
        result = {
            'test_name': self.title,
            'status': 'unknown',
            'validations': [],
            'metrics': {},
            'warnings': [],
            'errors': [],
        }
        self.execute(result, options)
        if result['errors']:
            result['status'] = RunStatus.ERROR
        elif any(v['status'] == RunStatus.FAIL for v in result['validations']):
            result['status'] = RunStatus.FAIL
        elif result['warnings']:
            result['status'] = RunStatus.WARNING
        else:
            result['status'] = RunStatus.PASS
        result['duration_ms'] = int((time.monotonic() - started) * 1000)
        return result

    def execute(self, result: Dict[str, Any], options: Dict[str, Any]):
        raise NotImplementedError


class CueSumMonteCarlo(AcceptanceSuite):
    title = 'CUE+CUE Monte Carlo'

    def execute(self, result, options):
        quick = options.get('quick', False)
        config = EnsembleConfig(CueSum(2), n=options.get('n', 60 if quick else 200),
                                samples=options.get('samples', 10 if quick else 100),
                                seed=options.get('seed', 42))
        cloud = realize_model(config, threads=options.get('threads', 1))
        report = radial_compare(cloud, config.model, bins=options.get('bins', RADIAL_BINS))
        validate_report(report, ReportThresholds(max_l1=0.15 if quick else 0.05, max_outside_fraction=0.01))
        result['validations'].extend(report.validations)
        result['metrics']['report'] = report.to_dict()


class MCueDiffusion(AcceptanceSuite):
    title = 'M-CUE free unitary diffusion'

    def execute(self, result, options):
        quick = options.get('quick', False)
        for m in options.get('m_values', (3, 5, 10)):
            model = CueSum.diffusion(m)
            config = EnsembleConfig(model, n=options.get('n', 60 if quick else 200),
                                    samples=options.get('samples', 10 if quick else 50),
                                    seed=options.get('seed', 42))
            cloud = realize_model(config, threads=options.get('threads', 1))
            report = radial_compare(cloud, model, bins=options.get('bins', RADIAL_BINS))
            validate_report(report, ReportThresholds(origin_relative_tolerance=0.1,
                                                     border_radius=1.0,
                                                     border_tolerance=0.05 if quick else 0.02))
            for v in report.validations:
                v['metric'] = f"M={m}:{v['metric']}"
            result['validations'].extend(report.validations)
            result['metrics'][f"M={m}"] = {
                'origin_density': report.origin_density,
                'origin_point_theory': (1.0 - 1.0 / m) / math.pi,
                'border_estimate': report.border_estimate,
            }


class CueGueMonteCarlo(AcceptanceSuite):
    title = 'CUE+pGUE Monte Carlo'

    def execute(self, result, options):
        quick = options.get('quick', False)
        for p in options.get('p_values', (0.5, 0.75, 1.0, 2.0)):
            model = CueGue(p)
            config = EnsembleConfig(model, n=options.get('n', 60 if quick else 100),
                                    samples=options.get('samples', 10 if quick else 50),
                                    seed=options.get('seed', 7))
            cloud = realize_model(config, threads=options.get('threads', 1))
            report = planar_compare(cloud, model, bins=options.get('bins', PLANAR_BINS))
            validate_report(report, ReportThresholds(max_outside_fraction=0.01,
                                                     max_hole_fraction=0.01 if p < 1.0 else None))
            for v in report.validations:
                v['metric'] = f"p={p:g}:{v['metric']}"
            result['validations'].extend(report.validations)
            result['metrics'][f"p={p:g}"] = report.to_dict()


def _cue_gue_margin(p: float, z: complex) -> float:
    """Rough distance of z to the outer ellipse or the hole circle"""
    border = cue_gue_border(p)
    elliptic = math.sqrt(border.a_coef * z.real ** 2 + border.b_coef * z.imag ** 2)
    margin = abs(elliptic - 1.0) * min(border.semi_axes)
    if border.hole_radius is not None:
        margin = min(margin, abs(abs(z) - border.hole_radius))
    return margin


class OracleEquivalence(AcceptanceSuite):
    """Newton inversion of the quaternion addition law versus the closed forms"""
    title = 'Addition law versus closed forms'

    def execute(self, result, options):
        grid = options.get('grid', 11 if options.get('quick', False) else 41)
        cases = [
            (CueSum(2), 1e-8),
            (CueGue(0.5), 1e-7),
            (CueGue(2.0), 1e-7),
        ]
        for model, tolerance in cases:
            worst, compared, failures = self._compare(model, grid)
            result['metrics'][model.label] = {'compared': compared, 'max_deviation': worst,
                                              'failures': failures}
            result['validations'].append(_validation(
                f"{model.label}:max_deviation", worst, tolerance,
                f"max |dG|, |d(-C)| over {compared} grid points at distance > 0.05 from the border"))
            result['validations'].append(_validation(
                f"{model.label}:failures", failures, 0, "points where Newton inversion did not converge"))

    @staticmethod
    def _compare(model, grid: int):
        bsum = blue_sum_for(model)
        if isinstance(model, CueSum):
            sx = sy = 2.5
        else:
            sx, sy = (1.2 * e for e in cue_gue_border(model.p).extent)
        xs = np.linspace(-sx, sx, grid)
        ys = np.linspace(-sy, sy, grid)

        worst = 0.0
        compared = 0
        failures = 0
        for y in ys:
            seed = None
            for x in xs:
                z = complex(x, y)
                if isinstance(model, CueSum):
                    if abs(abs(z) - model.border_radius) <= 0.05 or abs(abs(z) - model.m) < 0.05:
                        continue
                else:
                    border = cue_gue_border(model.p)
                    if _cue_gue_margin(model.p, z) <= 0.05 or border.in_hole(x, y):
                        continue
                try:
                    closed = model_solution(model, z)
                    numeric = invert_blue_at(bsum, z, seed=seed)
                except NoConvergence:
                    failures += 1
                    continue
                seed = numeric.q
                deviation = max(abs(numeric.greens - closed.greens), abs(numeric.corr - closed.corr))
                worst = max(worst, deviation)
                compared += 1
        return worst, compared, failures


class AnalyticSelfConsistency(AcceptanceSuite):
    """Finite-difference density from G versus the closed-form density, and total mass"""
    title = 'Analytic self-consistency'

    def execute(self, result, options):
        models = [CueSum(2), CueSum.diffusion(5), CueGue(0.5), CueGue(2.0)]
        angles = np.linspace(0.1, 2.0 * np.pi + 0.1, options.get('angles', 8), endpoint=False)
        for model in models:
            worst = 0.0
            for z in self._interior_points(model, angles):
                closed = model_solution(model, z)

                def greens(x, y, model=model):
                    return model_solution(model, complex(x, y)).greens

                fd = density_from_greens(greens, z.real, z.imag)
                worst = max(worst, abs(fd - closed.density))
            result['validations'].append(_validation(
                f"{model.label}:density_fd_deviation", worst, 1e-6,
                "max |(1/pi) dG/dzbar - rho| at interior points"))
            mass = total_mass(model)
            result['validations'].append(_validation(
                f"{model.label}:total_mass", abs(mass - 1.0), 1e-3, f"|integral of rho - 1| (mass {mass:.6f})"))

    @staticmethod
    def _interior_points(model, angles) -> List[complex]:
        if isinstance(model, CueSum):
            return [f * model.border_radius * complex(math.cos(t), math.sin(t))
                    for f in (0.2, 0.5, 0.8) for t in angles]
        border = cue_gue_border(model.p)
        a, b = border.a_coef, border.b_coef
        points = []
        for t in angles:
            reach = 1.0 / math.sqrt(math.cos(t) ** 2 / a + math.sin(t) ** 2 / b)
            inner = (border.hole_radius or 0.0) / reach
            for f in (0.3, 0.6):
                s = inner + f * (1.0 - inner)
                z = complex(s * math.cos(t) / math.sqrt(a), s * math.sin(t) / math.sqrt(b))
                if abs(z.real) > 10 * AXIS_TOLERANCE:
                    points.append(z)
        return points


class StructuralInvariants(AcceptanceSuite):
    title = 'Quaternion structural invariants'

    def execute(self, result, options):
        count = options.get('count', 500 if options.get('quick', False) else 10000)
        rng = np.random.default_rng(options.get('seed', 2024))
        c = (rng.uniform(0.05, 3.0, count) * np.exp(2j * np.pi * rng.random(count)))
        d = rng.normal(size=count) + 1j * rng.normal(size=count)

        reciprocity = 0.0
        outside_violations = 0
        discriminant_violations = 0
        algebra = 0.0
        for ci, di in zip(c, d):
            q = Quaternion(complex(ci), complex(di))
            u1, u2, g = unitary_u_pair(q)
            reciprocity = max(reciprocity, abs(u1.conjugate() * u2 - 1.0))
            outside_violations += int(abs(u1) <= 1.0)
            discriminant_violations += int(g * g - 4.0 * abs(ci) ** 2 < 0)
            other = Quaternion(complex(di), complex(ci))
            oracle = q.to_matrix() @ other.to_matrix()
            algebra = max(algebra, float(np.max(np.abs(q_mul(q, other).to_matrix() - oracle)))
                          / max(1.0, float(np.max(np.abs(oracle)))))

        hermitization = 0.0
        for z in c + 0.1j * np.sign(c.imag + 1e-300):
            reduced = hermitian_quaternion_green(GUE_GREENS, Quaternion.diag(complex(z)))
            hermitization = max(hermitization, abs(reduced.a - g_gue(complex(z))) + abs(reduced.b))

        round_trip = 0.0
        failures = 0
        for ci, di in zip(c[:max(1, count // 20)], d[:max(1, count // 20)]):
            w = Quaternion(complex(ci), complex(di))
            if abs(abs(ci) - 1.0) < 0.05:
                continue
            target = cue_quaternion_green(w)
            try:
                blue = cue_quaternion_blue(target, seed=Quaternion(w.a * 1.001, w.b * 0.999))
            except NoConvergence:
                failures += 1
                continue
            round_trip = max(round_trip, cue_quaternion_green(blue).max_abs_diff(target))

        v = result['validations']
        v.append(_validation('u_pair_reciprocity', reciprocity, 1e-10, 'max |conj(u1) u2 - 1|'))
        v.append(_validation('u1_outside_unit_circle', outside_violations, 0, 'count of |u1| <= 1'))
        v.append(_validation('discriminant_sign', discriminant_violations, 0, 'count of g^2 - 4|c|^2 < 0'))
        v.append(_validation('quaternion_product', algebra, 1e-12, 'relative deviation of q_mul from 2x2 products'))
        v.append(_validation('hermitization', hermitization, 1e-12, 'max |G_GUE(diag z) - (G(z), 0)|'))
        v.append(_validation('green_blue_round_trip', round_trip, 1e-9, 'max |G(B(Q)) - Q| for the CUE'))
        v.append(_validation('green_blue_failures', failures, 0, 'CUE Blue inversions that did not converge'))
        result['metrics']['inputs'] = count


class OverlapCorrelator(AcceptanceSuite):
    title = 'Eigenvector overlap correlator'

    def execute(self, result, options):
        quick = options.get('quick', False)
        model = CueSum(2)
        config = EnsembleConfig(model, n=options.get('n', 60 if quick else 200),
                                samples=options.get('samples', 10 if quick else 100),
                                seed=options.get('seed', 42))
        values, overlaps = [], []
        skipped = 0
        for s in range(config.samples):
            try:
                lam, o = overlap_correlator(model_matrix(config, s))
            except IllConditionedEigenbasis as e:
                skipped += 1
                result['warnings'].append(f"sample {s} skipped: {e}")
                continue
            values.append(lam)
            overlaps.append(o)
        comparison = overlap_compare(np.concatenate(values), np.concatenate(overlaps), config.n, model,
                                     bins=options.get('bins', 20))
        relative = abs(comparison['estimate_integral'] / comparison['theory_integral'] - 1.0)

        control = 0.0
        for s in range(options.get('control_samples', 3)):
            _, o = overlap_correlator(sample_cue(config.n, substream(config.seed, s, 99)))
            control = max(control, float(np.max(np.abs(o - 1.0))))

        v = result['validations']
        v.append(_validation('overlap_l1', comparison['l1_distance'], 0.25 if quick else 0.1,
                             'L1 distance of the binned overlap density to -C/pi'))
        v.append(_validation('overlap_integral', relative, 0.2 if quick else 0.1,
                             'relative deviation of the integrated overlap density'))
        v.append(_validation('normal_control', control, 1e-8, 'max |O_i - 1| for pure CUE matrices'))
        result['metrics'].update({'comparison': comparison, 'skipped_samples': skipped})


@dataclass
class VerificationSuite:
    """Represents an acceptance suite"""
    name: str
    description: str
    suite_class: Callable[[], AcceptanceSuite]
    requires_sampling: bool = False


@dataclass
class VerificationRunResult:
    """Results from a complete acceptance run"""
    run_id: str
    start_time: datetime
    end_time: Optional[datetime] = None
    total_duration_ms: int = 0
    suites_run: List[str] = field(default_factory=list)
    results: Dict[str, Any] = field(default_factory=dict)
    overall_status: str = 'unknown'
    summary: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['start_time'] = self.start_time.isoformat()
        data['end_time'] = self.end_time.isoformat() if self.end_time else None
        return data


class VerificationRunner:
    """
    Registry and executor of the acceptance suites
    """

    def __init__(self):
        self.suites = {
            'cue_sum_monte_carlo': VerificationSuite(
                name='CUE+CUE Monte Carlo',
                description='Radial density and containment of pooled CUE+CUE eigenvalues',
                suite_class=CueSumMonteCarlo,
                requires_sampling=True
            ),
            'mcue_diffusion': VerificationSuite(
                name='M-CUE Diffusion',
                description='Border radius and origin density of scaled sums of M CUE matrices',
                suite_class=MCueDiffusion,
                requires_sampling=True
            ),
            'cue_gue_monte_carlo': VerificationSuite(
                name='CUE+pGUE Monte Carlo',
                description='Ellipse containment and empty hole of CUE+pGUE spectra',
                suite_class=CueGueMonteCarlo,
                requires_sampling=True
            ),
            'oracle_equivalence': VerificationSuite(
                name='Oracle Equivalence',
                description='Numerical quaternion addition law against closed-form solutions',
                suite_class=OracleEquivalence
            ),
            'analytic_self_consistency': VerificationSuite(
                name='Analytic Self-Consistency',
                description='Finite-difference densities and total mass of the analytic solutions',
                suite_class=AnalyticSelfConsistency
            ),
            'structural_invariants': VerificationSuite(
                name='Structural Invariants',
                description='u-pair, quaternion algebra, Hermitization and Green/Blue round trips',
                suite_class=StructuralInvariants
            ),
            'overlap_correlator': VerificationSuite(
                name='Overlap Correlator',
                description='Binned eigenvector overlaps of CUE+CUE against -C/pi',
                suite_class=OverlapCorrelator,
                requires_sampling=True
            ),
        }

    def list_suites(self) -> List[Dict[str, Any]]:
        return [{
            'id': suite_id,
            'name': suite.name,
            'description': suite.description,
            'requires_sampling': suite.requires_sampling,
        } for suite_id, suite in self.suites.items()]

    def run_suite(self, suite_id: str, progress_callback=None, options=None) -> Dict[str, Any]:
        """
        Run a single acceptance suite

        Args:
            suite_id: suite identifier
            progress_callback: Optional callback for progress updates
            options: suite options (quick, seed, threads, sizes)

        Returns:
            Suite result dictionary
        """
        if suite_id not in self.suites:
            return {
                'test_name': suite_id,
                'status': RunStatus.ERROR,
                'errors': [f"Unknown acceptance suite: {suite_id}"]
            }

        suite = self.suites[suite_id]
        logger.info(f"Running acceptance suite: {suite.name}")
        if progress_callback:
            progress_callback({'suite': suite_id, 'status': 'running', 'message': f'Executing {suite.name}...'})

        try:
            result = suite.suite_class().run(options)
        except (FRVError, ValueError, ArithmeticError, np.linalg.LinAlgError) as e:
            logger.error(f"Error running acceptance suite {suite_id}: {e}")
            result = {
                'test_name': suite.name,
                'status': RunStatus.ERROR,
                'validations': [],
                'errors': [f"Exception during suite execution: {e}"]
            }

        for validation in result.get('validations', []):
            if validation['status'] == RunStatus.FAIL:
                logger.warning(f"{suite_id}: {validation['metric']} = {validation['actual']:.4g} "
                               f"exceeds {validation['expected_max']:.4g}")

        if progress_callback:
            progress_callback({'suite': suite_id, 'status': 'completed', 'result': result})
        return result

    def run_all(self, suite_ids: Optional[List[str]] = None, progress_callback=None,
                options=None) -> VerificationRunResult:
        """
        Run the selected (default: all) acceptance suites

        Returns:
            VerificationRunResult with every suite result
        """
        run_id = datetime.now().strftime('%Y%m%d_%H%M%S')
        run_result = VerificationRunResult(run_id=run_id, start_time=datetime.now())
        logger.info(f"Starting acceptance run {run_id}")

        for suite_id in suite_ids or list(self.suites):
            result = self.run_suite(suite_id, progress_callback, options)
            run_result.results[suite_id] = result
            run_result.suites_run.append(suite_id)

        run_result.end_time = datetime.now()
        run_result.total_duration_ms = int(
            (run_result.end_time - run_result.start_time).total_seconds() * 1000
        )

        statuses = [r.get('status') for r in run_result.results.values()]
        run_result.summary = {
            'total': len(run_result.suites_run),
            'passed': statuses.count(RunStatus.PASS),
            'failed': statuses.count(RunStatus.FAIL),
            'warnings': statuses.count(RunStatus.WARNING),
            'errors': statuses.count(RunStatus.ERROR),
        }

        if run_result.summary['errors'] > 0 or run_result.summary['failed'] > 0:
            run_result.overall_status = RunStatus.FAIL
        elif run_result.summary['warnings'] > 0:
            run_result.overall_status = RunStatus.WARNING
        else:
            run_result.overall_status = RunStatus.PASS

        logger.info(f"Acceptance run {run_id} completed: {run_result.overall_status}")
        return run_result
