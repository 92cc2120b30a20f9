import csv
import json

import numpy as np
import pytest

import app
from frvkit.errors import ModelParseError
from frvkit.results_exporter import ResultsExporter


@pytest.fixture
def run(log_dir):
    def _run(*argv, environ=None):
        return app.main([*argv, '--log-dir', log_dir], environ=environ or {})
    return _run


def _sample(run, path, seed=3):
    return run('sample', '--n', '20', '--samples', '5', '--seed', str(seed), '--output', str(path))


def test_solve_closed_grid(run, tmp_path):
    output = tmp_path / 'solve.csv'
    assert run('solve', '--model', 'cue+cue', '--bounds', '-2:2:-2:2', '--grid', '11',
               '--output', str(output)) == app.EXIT_OK
    columns = ResultsExporter().read_grid_csv(str(output))
    assert columns['x'].size == 121
    centre = (columns['x'] == 0.0) & (columns['y'] == 0.0)
    assert columns['rho'][centre][0] == pytest.approx(0.0795775, abs=1e-7)


def test_negative_bounds_reach_the_parser():
    assert app.join_option_values(['solve', '--bounds', '-2:2:-1:1', '--grid', '3']) == \
        ['solve', '--bounds=-2:2:-1:1', '--grid', '3']
    assert app.join_option_values(['solve', '--bounds']) == ['solve', '--bounds']
    args = app.build_parser().parse_args(app.join_option_values(['solve', '--bounds', '-0.5:0.5:-0.5:0.5']))
    assert args.bounds == '-0.5:0.5:-0.5:0.5'


def test_solve_negative_bounds_cover_the_grid(run, tmp_path):
    output = tmp_path / 'solve.csv'
    assert run('solve', '--model', 'mcue:3', '--bounds', '-1:-0.5:-1:-0.5', '--grid', '2',
               '--output', str(output)) == app.EXIT_OK
    columns = ResultsExporter().read_grid_csv(str(output))
    assert sorted(set(columns['x'].tolist())) == [-1.0, -0.5]


def test_solve_newton_matches_closed(run, tmp_path):
    common = ('solve', '--model', 'mcue:5', '--bounds', '0.1:0.9:0.1:0.9', '--grid', '3')
    assert run(*common, '--output', str(tmp_path / 'closed.csv')) == app.EXIT_OK
    assert run(*common, '--engine', 'newton', '--output', str(tmp_path / 'newton.csv')) == app.EXIT_OK

    exporter = ResultsExporter()
    closed = exporter.read_grid_csv(str(tmp_path / 'closed.csv'))
    newton = exporter.read_grid_csv(str(tmp_path / 'newton.csv'))
    assert newton['x'].size == 9
    for grid in (closed, newton):
        order = np.lexsort((grid['x'], grid['y']))
        for name in grid:
            grid[name] = grid[name][order]
    assert np.array_equal(closed['inside'], newton['inside'])
    assert np.allclose(closed['rho'], newton['rho'], atol=1e-6)
    assert np.allclose(closed['reG'], newton['reG'], atol=1e-8)


def test_solve_writes_border(run, tmp_path):
    border = tmp_path / 'border.csv'
    assert run('solve', '--model', 'mcue:3', '--grid', '5', '--output', str(tmp_path / 's.csv'),
               '--border', str(border)) == app.EXIT_OK
    assert border.read_text().startswith('curve,x,y\n')


def test_invalid_inputs(run, tmp_path):
    assert run('solve', '--model', 'foo', '--output', str(tmp_path / 'x.csv')) == app.EXIT_INPUT_ERROR
    assert run('solve', '--bounds', '1:0:0:1', '--output', str(tmp_path / 'x.csv')) == app.EXIT_INPUT_ERROR
    assert run('solve', '--grid', '1', '--output', str(tmp_path / 'x.csv')) == app.EXIT_INPUT_ERROR
    assert run('acceptance', '--suites', 'nope') == app.EXIT_INPUT_ERROR
    assert run('verify') == app.EXIT_INPUT_ERROR


def test_sample_is_reproducible(run, tmp_path):
    first = tmp_path / 'a.csv'
    second = tmp_path / 'b.csv'
    assert _sample(run, first) == app.EXIT_OK
    assert _sample(run, second, seed=3) == app.EXIT_OK
    assert first.read_bytes() == second.read_bytes()
    assert len(first.read_text().splitlines()) == 101

    sidecar = json.loads((tmp_path / 'a.csv.json').read_text())
    assert sidecar['config']['seed'] == 3
    assert sidecar['config_hash'] == json.loads((tmp_path / 'b.csv.json').read_text())['config_hash']


def test_verify_report(run, tmp_path):
    cloud = tmp_path / 'cloud.csv'
    report = tmp_path / 'report.json'
    _sample(run, cloud)
    code = run('verify', '--input', str(cloud), '--report', str(report))
    assert code in (app.EXIT_OK, app.EXIT_VERIFY_FAILED)
    data = json.loads(report.read_text())
    assert data['schema'] == 'frv-report/1'
    assert data['kind'] == 'radial'
    assert (code == app.EXIT_OK) == (data['status'] == 'pass')


def test_verify_integrity_errors(run, tmp_path):
    cloud = tmp_path / 'cloud.csv'
    _sample(run, cloud)
    assert run('verify', '--input', str(cloud), '--n', '20', '--samples', '5',
               '--seed', '4') == app.EXIT_INTEGRITY_ERROR

    (tmp_path / 'cloud.csv.json').unlink()
    assert run('verify', '--input', str(cloud)) == app.EXIT_INTEGRITY_ERROR


def test_verify_detects_edited_cloud(run, tmp_path):
    cloud = tmp_path / 'cloud.csv'
    _sample(run, cloud)
    with open(cloud, 'a', encoding='utf-8') as handle:
        handle.write('0,0\n')
    assert run('verify', '--input', str(cloud)) == app.EXIT_INTEGRITY_ERROR


def test_border_command(run, tmp_path):
    output = tmp_path / 'border.csv'
    assert run('border', '--model', 'cue+gue:0.5', '--output', str(output)) == app.EXIT_OK
    lines = output.read_text().splitlines()
    assert lines[0] == 'curve,x,y'
    assert {line.split(',')[0] for line in lines[1:]} == {'0', '1'}


def test_newton_border_is_the_circle(run, tmp_path):
    output = tmp_path / 'border.csv'
    assert run('border', '--model', 'cue+cue', '--engine', 'newton', '--rays', '4',
               '--output', str(output)) == app.EXIT_OK
    rows = [line.split(',') for line in output.read_text().splitlines()[1:]]
    assert len(rows) == 5
    for _, x, y in rows:
        assert np.hypot(float(x), float(y)) == pytest.approx(np.sqrt(2.0), abs=1e-6)


def test_golden_command(run, tmp_path):
    output = tmp_path / 'golden.json'
    assert run('golden', '--output', str(output)) == app.EXIT_OK
    record = json.loads(output.read_text())
    assert len(record['values']) == app.GOLDEN_COUNT


def test_plot_scatter(run, tmp_path):
    if not ResultsExporter().has_matplotlib:
        pytest.skip("matplotlib not installed")
    cloud = tmp_path / 'cloud.csv'
    _sample(run, cloud)
    output = tmp_path / 'scatter.svg'
    assert run('plot', '--kind', 'scatter', '--input', str(cloud), '--output', str(output)) == app.EXIT_OK
    assert output.exists()


def test_run_config_precedence(tmp_path):
    parser = app.build_parser()
    config = app.build_run_config(parser.parse_args(['sample']), environ={'FRV_THREADS': '3'})
    assert config.threads == 3
    assert config.explicit == []

    config = app.build_run_config(parser.parse_args(['sample', '--threads', '2']), environ={'FRV_THREADS': '3'})
    assert config.threads == 2
    assert config.explicit == ['threads']

    with pytest.raises(ModelParseError):
        app.build_run_config(parser.parse_args(['sample']), environ={'FRV_THREADS': 'many'})
    with pytest.raises(ModelParseError):
        app.build_run_config(parser.parse_args(['sample', '--threads', '0']), environ={})


def test_run_config_from_yaml(tmp_path):
    path = tmp_path / 'run.yaml'
    path.write_text('model: mcue:4\nn: 30\nseed: 11\n')
    args = app.build_parser().parse_args(['sample', '--config', str(path), '--n', '40'])
    config = app.build_run_config(args, environ={})
    assert config.model == 'mcue:4'
    assert config.n == 40
    assert config.seed == 11
    assert config.model_spec().m == 4
    assert 'explicit' not in config.to_dict()


def test_acceptance_writes_validation_csv(run, tmp_path):
    report = tmp_path / 'run.json'
    table = tmp_path / 'run.csv'
    code = run('acceptance', '--suites', 'structural_invariants', '--quick', '--report', str(report),
               '--csv', str(table))
    assert code in (app.EXIT_OK, app.EXIT_VERIFY_FAILED)
    with open(table, newline='', encoding='utf-8') as handle:
        header, *rows = list(csv.reader(handle))
    assert header == ['suite', 'metric', 'status', 'actual', 'expected_max', 'description']
    assert rows and {row[0] for row in rows} == {'structural_invariants'}
    assert len(rows) == len(json.loads(report.read_text())['results']['structural_invariants']['validations'])
