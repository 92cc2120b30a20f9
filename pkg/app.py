#!/usr/bin/env python3
"""
FRVKit command-line driver
Analytic solves, Monte Carlo sampling, verification reports, borders, figures
and the acceptance suites of the quaternion free-addition toolkit
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from frvkit.addition_engine import borderline_scan, solve_grid
from frvkit.closed_models import (CueSum, ModelSpec, blue_sum_for, model_border,
                                  solve_model_grid)
from frvkit.ensembles import (GOLDEN_COUNT, GOLDEN_SEED, EigCloud, EnsembleConfig,
                              realize_model, write_golden_vectors)
from frvkit.errors import ConfigHashMismatch, FRVError, ModelParseError
from frvkit.results_exporter import ResultsExporter, format_float
from frvkit.spectra import (PLANAR_BINS, RADIAL_BINS, ReportThresholds, RunStatus, planar_compare,
                            radial_compare, validate_report)
from frvkit.verification_runner import VerificationRunner
from model_parser import ModelParser

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INPUT_ERROR = 2
EXIT_SOLVER_FAILURE = 3
EXIT_INTEGRITY_ERROR = 4

DEFAULT_GOLDEN_PATH = os.path.join('data', 'golden_stream.json')


def configure_logging(verbose: bool = False, log_dir: str = 'logs'):
    """Console logging plus logs/frvkit.log; console only when the directory is not writable"""
    level = logging.DEBUG if verbose else logging.INFO
    log_format = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    try:
        os.makedirs(log_dir, exist_ok=True)
        log_path = os.path.join(log_dir, 'frvkit.log')
        with open(log_path, 'a'):
            pass
        logging.basicConfig(
            level=level,
            format=log_format,
            handlers=[
                logging.FileHandler(log_path),
                logging.StreamHandler()
            ],
            force=True
        )
    except (PermissionError, OSError) as e:
        print(f"Warning: Cannot create log file ({e}), using console logging only", file=sys.stderr)
        logging.basicConfig(level=level, format=log_format, handlers=[logging.StreamHandler()], force=True)


@dataclass
class RunConfig:
    """One command invocation after defaults, YAML, FRV_THREADS and flags are merged"""
    command: str
    model: str = 'cue+cue'
    bounds: Optional[str] = None
    grid: int = 101
    engine: str = 'closed'
    n: int = 200
    samples: int = 100
    seed: int = 42
    bins: Optional[int] = None
    threads: int = 1
    output: Optional[str] = None
    input: Optional[str] = None
    report: Optional[str] = None
    kind: Optional[str] = None
    border: Optional[str] = None
    rays: int = 64
    suites: Optional[str] = None
    quick: bool = False
    pdf: Optional[str] = None
    csv: Optional[str] = None
    verbose: bool = False
    explicit: List[str] = field(default_factory=list)

    def model_spec(self) -> ModelSpec:
        return ModelParser().parse_model(self.model)

    def ensemble_config(self) -> EnsembleConfig:
        return EnsembleConfig(self.model_spec(), self.n, self.samples, self.seed)

    def config_hash(self) -> str:
        return self.ensemble_config().config_hash()

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data.pop('explicit')
        return data


MERGED_FIELDS = ('model', 'bounds', 'grid', 'engine', 'n', 'samples', 'seed', 'bins', 'threads',
                 'output', 'input', 'report', 'kind', 'border', 'rays', 'suites', 'quick', 'pdf', 'csv',
                 'verbose')


def build_run_config(args: argparse.Namespace, environ: Optional[Dict[str, str]] = None) -> RunConfig:
    """
    Merge configuration sources, lowest priority first:
    defaults, YAML (--config), FRV_THREADS, command-line flags

    Raises:
        ModelParseError: invalid YAML, model string, bounds or FRV_THREADS value
    """
    environ = os.environ if environ is None else environ
    config = RunConfig(command=args.command)
    parser = ModelParser()

    if getattr(args, 'config', None):
        for key, value in parser.load_config(args.config).items():
            setattr(config, key, value)

    threads_env = environ.get('FRV_THREADS')
    if threads_env:
        try:
            config.threads = int(threads_env)
        except ValueError as e:
            raise ModelParseError(f"FRV_THREADS must be an integer, got '{threads_env}'") from e

    for name in MERGED_FIELDS:
        value = getattr(args, name, None)
        if value is not None and value is not False:
            setattr(config, name, value)
            config.explicit.append(name)

    if config.threads < 1:
        raise ModelParseError(f"threads must be >= 1, got {config.threads}")
    config.model_spec()
    if config.bounds is not None:
        parser.parse_bounds(config.bounds)
    return config


def _grid_axes(config: RunConfig, model: ModelSpec) -> Tuple[np.ndarray, np.ndarray]:
    if config.bounds:
        x0, x1, y0, y1 = ModelParser().parse_bounds(config.bounds)
    else:
        sx, sy = model_border(model).extent
        x0, x1, y0, y1 = -1.25 * sx, 1.25 * sx, -1.25 * sy, 1.25 * sy
    if config.grid < 2:
        raise ModelParseError(f"grid must be >= 2, got {config.grid}")
    return np.linspace(x0, x1, config.grid), np.linspace(y0, y1, config.grid)


def _report_failures(failures: Sequence[Tuple[float, float, str]]):
    report = {'status': RunStatus.ERROR,
              'failed_points': [{'x': x, 'y': y, 'error': e} for x, y, e in failures]}
    print(json.dumps(report, indent=2), file=sys.stderr)


def cmd_solve(config: RunConfig) -> int:
    """Density grid CSV (x,y,rho,reG,imG,negC,inside) from the closed form or Newton inversion"""
    model = config.model_spec()
    xs, ys = _grid_axes(config, model)
    exporter = ResultsExporter()
    output = config.output or 'solve.csv'

    if config.engine == 'closed':
        grid = solve_model_grid(model, xs, ys, threads=config.threads)
        failures = grid.failures
        rows = grid.rows()
    elif config.engine == 'newton':
        solution = solve_grid(blue_sum_for(model), xs, ys, with_density=True, threads=config.threads)
        failures = solution.failures
        rows = []
        for iy, y in enumerate(ys):
            for ix, x in enumerate(xs):
                if not solution.converged[iy, ix]:
                    continue
                g = solution.greens[iy, ix]
                corr = float(solution.corr[iy, ix])
                rows.append({'x': x, 'y': y, 'rho': solution.density[iy, ix], 'reG': g.real, 'imG': g.imag,
                             'negC': corr, 'inside': corr > 1e-10})
    else:
        raise ModelParseError(f"unknown engine '{config.engine}'; expected closed or newton")

    if failures:
        _report_failures(failures)
        return EXIT_SOLVER_FAILURE

    exporter.export_grid_csv(rows, output)
    if config.border:
        _write_border(model, config.border)
    return EXIT_OK


def _write_border(model: ModelSpec, path: str, curves: Optional[List[Tuple[np.ndarray, np.ndarray]]] = None):
    curves = curves if curves is not None else model_border(model).curves()
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as handle:
        handle.write('curve,x,y\n')
        for index, (cx, cy) in enumerate(curves):
            for x, y in zip(cx, cy):
                handle.write(f"{index},{format_float(x)},{format_float(y)}\n")
    logger.info(f"border written: {path}")


def cmd_border(config: RunConfig) -> int:
    """Analytic border curves, or the outer border located by ray scans of the Newton solution"""
    model = config.model_spec()
    output = config.output or 'border.csv'
    if config.engine == 'newton':
        bsum = blue_sum_for(model)
        angles = np.linspace(0.0, 2.0 * np.pi, config.rays, endpoint=False)
        radii = [borderline_scan(bsum, 0j, complex(np.cos(t), np.sin(t))) for t in angles]
        radii.append(radii[0])
        angles = np.append(angles, 2.0 * np.pi)
        curves = [(np.asarray(radii) * np.cos(angles), np.asarray(radii) * np.sin(angles))]
        _write_border(model, output, curves)
    else:
        _write_border(model, output)
    return EXIT_OK


def cmd_sample(config: RunConfig) -> int:
    """Eigenvalue CSV (re,im) plus a JSON sidecar carrying the config hash and data digest"""
    ensemble = config.ensemble_config()
    cloud = realize_model(ensemble, threads=config.threads)
    output = config.output or 'eigenvalues.csv'
    exporter = ResultsExporter()
    exporter.export_cloud_csv(cloud.points, output)
    exporter.write_sidecar(output, ensemble.to_dict(), ensemble.config_hash())
    return EXIT_OK


def _load_cloud(config: RunConfig, exporter: ResultsExporter) -> EigCloud:
    """
    Read a sampled cloud and check it against its sidecar

    Explicit sampling flags must reproduce the recorded config hash.
    """
    if not config.input:
        raise ModelParseError("--input is required")
    sidecar = exporter.read_sidecar(config.input)
    expected = None
    if sidecar is not None and any(k in config.explicit for k in ('model', 'n', 'samples', 'seed')):
        expected = config.config_hash()
    sidecar = exporter.check_integrity(config.input, expected)

    recorded = sidecar['config']
    model = ModelParser().parse_model(recorded['model'])
    ensemble = EnsembleConfig(model, int(recorded['n']), int(recorded['samples']), int(recorded['seed']))
    if ensemble.config_hash() != sidecar['config_hash']:
        raise ConfigHashMismatch(f"{config.input}: sidecar config does not hash to its recorded value")
    return EigCloud(ensemble, exporter.read_cloud_csv(config.input))


def default_thresholds(model: ModelSpec) -> ReportThresholds:
    if isinstance(model, CueSum):
        if model.m == 2 and model.scale == 1.0:
            return ReportThresholds(max_l1=0.05, max_outside_fraction=0.01)
        return ReportThresholds(max_outside_fraction=0.01, origin_relative_tolerance=0.1,
                                border_radius=model.border_radius, border_tolerance=0.02 * model.border_radius)
    return ReportThresholds(max_outside_fraction=0.01, max_hole_fraction=0.01 if model.p < 1.0 else None)


def cmd_verify(config: RunConfig) -> int:
    """ComparisonReport JSON of a sampled cloud against the analytic density"""
    exporter = ResultsExporter()
    cloud = _load_cloud(config, exporter)
    model = cloud.config.model
    kind = config.kind or ('radial' if isinstance(model, CueSum) else 'planar')
    if kind == 'radial':
        report = radial_compare(cloud, model, bins=config.bins or RADIAL_BINS)
    elif kind == 'planar':
        report = planar_compare(cloud, model, bins=config.bins or PLANAR_BINS)
    else:
        raise ModelParseError(f"unknown comparison kind '{kind}'; expected radial or planar")
    validate_report(report, default_thresholds(model))

    output = config.report or config.input + '.report.json'
    exporter.export_json(report.to_dict(), output)
    logger.info(f"verification of {model.label}: {report.status}")
    return EXIT_OK if report.status == RunStatus.PASS else EXIT_VERIFY_FAILED


def cmd_plot(config: RunConfig) -> int:
    """SVG scatter (with border), radial histogram (with theory) or density heatmap"""
    exporter = ResultsExporter()
    if not exporter.has_matplotlib:
        raise ModelParseError("plotting requires matplotlib")
    kind = config.kind or 'scatter'
    output = config.output or f"{kind}.svg"

    if kind == 'density':
        if not config.input:
            raise ModelParseError("--input (a solve CSV) is required")
        model = config.model_spec() if 'model' in config.explicit else None
        exporter.plot_density(exporter.read_grid_csv(config.input), model, output)
        return EXIT_OK

    cloud = _load_cloud(config, exporter)
    if kind == 'scatter':
        exporter.plot_scatter(cloud.points, cloud.config.model, output)
    elif kind == 'radial':
        if not isinstance(cloud.config.model, CueSum):
            raise ModelParseError("radial plots need a circularly symmetric model (cue+cue or mcue)")
        exporter.plot_radial(cloud.points, cloud.config.model, output, bins=config.bins or 25)
    else:
        raise ModelParseError(f"unknown plot kind '{kind}'; expected scatter, radial or density")
    return EXIT_OK


def cmd_acceptance(config: RunConfig) -> int:
    """Run the acceptance suites and export the run as JSON (plus CSV and PDF when requested)"""
    runner = VerificationRunner()
    suite_ids = [s.strip() for s in config.suites.split(',')] if config.suites else None
    if suite_ids:
        unknown = [s for s in suite_ids if s not in runner.suites]
        if unknown:
            raise ModelParseError(f"unknown acceptance suite(s): {', '.join(unknown)}")

    def progress(update):
        if update.get('status') == 'running':
            logger.info(update.get('message', ''))

    options = {'quick': config.quick, 'threads': config.threads}
    run = runner.run_all(suite_ids, progress_callback=progress, options=options)

    exporter = ResultsExporter()
    results = run.to_dict()
    exporter.export_results(results, 'json', config.report or 'acceptance_report.json')
    if config.csv:
        exporter.export_results(results, 'csv', config.csv)
    if config.pdf:
        exporter.export_results(results, 'pdf', config.pdf)
    return EXIT_OK if run.overall_status in (RunStatus.PASS, RunStatus.WARNING) else EXIT_VERIFY_FAILED


def cmd_golden(config: RunConfig) -> int:
    """Golden Gaussian draws of the sampling stream"""
    write_golden_vectors(config.output or DEFAULT_GOLDEN_PATH, seed=GOLDEN_SEED, count=GOLDEN_COUNT)
    return EXIT_OK


COMMANDS = {
    'solve': cmd_solve,
    'sample': cmd_sample,
    'verify': cmd_verify,
    'border': cmd_border,
    'plot': cmd_plot,
    'acceptance': cmd_acceptance,
    'golden': cmd_golden,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='YAML run configuration')
    common.add_argument('--model', help='cue+cue | mcue:M[@scale] | cue+gue:p')
    common.add_argument('--threads', type=int, help='worker cap (default: FRV_THREADS or 1)')
    common.add_argument('--output', help='output file')
    common.add_argument('--verbose', action='store_true', default=None)
    common.add_argument('--log-dir', default='logs')

    parser = argparse.ArgumentParser(prog='frvkit', description='Quaternion free random variables toolkit')
    sub = parser.add_subparsers(dest='command', required=True)

    solve = sub.add_parser('solve', parents=[common], help='analytic or Newton density grid')
    solve.add_argument('--bounds', help='x0:x1:y0:y1')
    solve.add_argument('--grid', type=int, help='points per axis')
    solve.add_argument('--engine', choices=['closed', 'newton'])
    solve.add_argument('--border', help='also write the border curves to this CSV')

    border = sub.add_parser('border', parents=[common], help='border curves')
    border.add_argument('--engine', choices=['closed', 'newton'])
    border.add_argument('--rays', type=int)

    sample = sub.add_parser('sample', parents=[common], help='Monte Carlo eigenvalues')
    sample.add_argument('--n', type=int)
    sample.add_argument('--samples', type=int)
    sample.add_argument('--seed', type=int)

    verify = sub.add_parser('verify', parents=[common], help='compare a sampled cloud with theory')
    verify.add_argument('--input', help='eigenvalue CSV written by sample')
    verify.add_argument('--n', type=int)
    verify.add_argument('--samples', type=int)
    verify.add_argument('--seed', type=int)
    verify.add_argument('--bins', type=int)
    verify.add_argument('--kind', choices=['radial', 'planar'])
    verify.add_argument('--report', help='report JSON path')

    plot = sub.add_parser('plot', parents=[common], help='SVG figures')
    plot.add_argument('--input')
    plot.add_argument('--kind', choices=['scatter', 'radial', 'density'])
    plot.add_argument('--bins', type=int)

    acceptance = sub.add_parser('acceptance', parents=[common], help='run the acceptance suites')
    acceptance.add_argument('--suites', help='comma-separated suite ids (default: all)')
    acceptance.add_argument('--quick', action='store_true', default=None, help='reduced ensemble sizes')
    acceptance.add_argument('--report', help='run JSON path')
    acceptance.add_argument('--pdf', help='also write a PDF summary')
    acceptance.add_argument('--csv', help='also write the validation table as CSV')

    sub.add_parser('golden', parents=[common], help='write golden vectors of the sampling stream')
    return parser


VALUE_OPTIONS = ('--bounds',)


def join_option_values(argv: Sequence[str]) -> List[str]:
    """Attach option values that start with '-' (bounds like -2:2:-2:2) so argparse keeps them"""
    joined = []
    args = iter(argv)
    for arg in args:
        if arg in VALUE_OPTIONS:
            value = next(args, None)
            joined.append(arg if value is None else f"{arg}={value}")
        else:
            joined.append(arg)
    return joined


def main(argv: Optional[Sequence[str]] = None, environ: Optional[Dict[str, str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(join_option_values(sys.argv[1:] if argv is None else argv))
    configure_logging(bool(args.verbose), args.log_dir)

    try:
        config = build_run_config(args, environ)
        logger.debug(f"run configuration: {config.to_dict()}")
        return COMMANDS[config.command](config)
    except ConfigHashMismatch as e:
        logger.error(f"integrity error: {e}")
        return EXIT_INTEGRITY_ERROR
    except (ModelParseError, OSError) as e:
        logger.error(f"input error: {e}")
        return EXIT_INPUT_ERROR
    except FRVError as e:
        logger.error(f"solver failure: {e}")
        return EXIT_SOLVER_FAILURE
    except ValueError as e:
        logger.error(f"input error: {e}")
        return EXIT_INPUT_ERROR


if __name__ == '__main__':
    sys.exit(main())
