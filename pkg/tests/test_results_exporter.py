import json

import numpy as np
import pytest

from frvkit.closed_models import CueGue, CueSum, solve_model_grid
from frvkit.errors import ConfigHashMismatch
from frvkit.results_exporter import GRID_COLUMNS, ResultsExporter, format_float, sidecar_path


@pytest.fixture
def exporter():
    return ResultsExporter()


@pytest.fixture
def acceptance_results():
    return {
        'run_id': 'run_test',
        'overall_status': 'fail',
        'summary': {'total': 2, 'passed': 1, 'failed': 1, 'errors': 0},
        'results': {
            'cue_cue_radial': {
                'status': 'pass',
                'validations': [{'metric': 'l1_distance', 'status': 'pass', 'actual': 0.01,
                                 'expected_max': 0.05, 'description': 'L1 distance'}],
                'errors': [],
            },
            'cue_gue_planar': {
                'status': 'fail',
                'validations': [{'metric': 'outside_fraction', 'status': 'fail', 'actual': 0.2,
                                 'expected_max': 0.01, 'description': 'points outside the border'}],
                'errors': [],
            },
        },
    }


def test_format_float_round_trips():
    for value in (0.1, 1.0 / 3.0, -2.5e-300, 123456789.123456789):
        assert float(format_float(value)) == value


def test_cloud_csv_round_trip_is_exact(exporter, tmp_path, rng):
    points = rng.normal(size=50) + 1j * rng.normal(size=50)
    path = str(tmp_path / 'cloud.csv')
    assert exporter.export_cloud_csv(points, path) == 50
    assert np.array_equal(exporter.read_cloud_csv(path), points)


def test_cloud_csv_rejects_foreign_columns(exporter, tmp_path):
    path = tmp_path / 'other.csv'
    path.write_text('a,b\n1,2\n')
    with pytest.raises(ValueError):
        exporter.read_cloud_csv(str(path))


def test_grid_csv_layout(exporter, tmp_path):
    xs = np.linspace(-1.0, 1.0, 3)
    grid = solve_model_grid(CueSum(2), xs, xs)
    path = str(tmp_path / 'grid.csv')
    assert exporter.export_grid_csv(grid.rows(), path) == 9

    lines = (tmp_path / 'grid.csv').read_text().splitlines()
    assert lines[0] == ','.join(GRID_COLUMNS)
    assert len(lines) == 10
    assert all(line.endswith((',true', ',false')) for line in lines[1:])

    columns = exporter.read_grid_csv(path)
    assert columns['inside'].dtype == bool
    assert columns['rho'][4] == pytest.approx(1.0 / (4.0 * np.pi))


def test_sidecar_integrity(exporter, tmp_path):
    path = str(tmp_path / 'cloud.csv')
    exporter.export_cloud_csv(np.array([1.0 + 2.0j, -0.5j]), path)
    record = exporter.write_sidecar(path, {'model': 'cue+cue'}, 'abc123')
    assert record['config_hash'] == 'abc123'

    assert exporter.check_integrity(path)['config']['model'] == 'cue+cue'
    assert exporter.check_integrity(path, expected_hash='abc123')['config_hash'] == 'abc123'
    with pytest.raises(ConfigHashMismatch):
        exporter.check_integrity(path, expected_hash='def456')

    with open(path, 'a', encoding='utf-8') as handle:
        handle.write('0,0\n')
    with pytest.raises(ConfigHashMismatch):
        exporter.check_integrity(path)


def test_missing_sidecar(exporter, tmp_path):
    path = str(tmp_path / 'bare.csv')
    exporter.export_cloud_csv(np.array([0j]), path)
    assert exporter.read_sidecar(path) is None
    with pytest.raises(ConfigHashMismatch):
        exporter.check_integrity(path)


def test_export_json_handles_numpy_values(exporter, tmp_path):
    path = str(tmp_path / 'report.json')
    exporter.export_json({'value': np.float64(0.5), 'flag': np.bool_(True),
                          'array': np.arange(3), 'z': 1 + 2j}, path)
    with open(path, encoding='utf-8') as handle:
        data = json.load(handle)
    assert data == {'value': 0.5, 'flag': True, 'array': [0, 1, 2], 'z': [1.0, 2.0]}
    assert sidecar_path('a.csv') == 'a.csv.json'


def test_export_results_formats(exporter, tmp_path, acceptance_results):
    assert exporter.export_results(acceptance_results, 'JSON', str(tmp_path / 'run.json'))
    assert not exporter.export_results(acceptance_results, 'xml', str(tmp_path / 'run.xml'))

    csv_path = tmp_path / 'run.csv'
    assert exporter.export_results(acceptance_results, 'csv', str(csv_path))
    lines = csv_path.read_text().splitlines()
    assert lines[0] == 'suite,metric,status,actual,expected_max,description'
    assert len(lines) == 3
    assert lines[2].startswith('cue_gue_planar,outside_fraction,fail')


def test_pdf_export(exporter, tmp_path, acceptance_results):
    if not exporter.has_reportlab:
        pytest.skip("reportlab not installed")
    path = tmp_path / 'run.pdf'
    assert exporter.export_to_pdf(acceptance_results, str(path))
    assert path.read_bytes().startswith(b'%PDF')


def test_figures(exporter, tmp_path, rng):
    if not exporter.has_matplotlib:
        pytest.skip("matplotlib not installed")
    points = 1.2 * (rng.random(200) * np.exp(2j * np.pi * rng.random(200)))
    assert exporter.plot_scatter(points, CueGue(0.5), str(tmp_path / 'scatter.svg'))
    assert exporter.plot_radial(points, CueSum(2), str(tmp_path / 'radial.svg'), bins=10)
    with pytest.raises(ValueError):
        exporter.plot_radial(points, CueGue(0.5), str(tmp_path / 'bad.svg'))

    xs = np.linspace(-1.0, 1.0, 4)
    path = str(tmp_path / 'grid.csv')
    exporter.export_grid_csv(solve_model_grid(CueSum(2), xs, xs).rows(), path)
    assert exporter.plot_density(exporter.read_grid_csv(path), CueSum(2), str(tmp_path / 'rho.svg'))
    assert (tmp_path / 'rho.svg').read_text().lstrip().startswith('<?xml')
