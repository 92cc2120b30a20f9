import math

import numpy as np
import pytest

from frvkit.closed_models import CueGue, CueSum, cue_gue_border, model_border
from frvkit.ensembles import EigCloud, EnsembleConfig
from frvkit.errors import EmptyCloud, IllConditionedEigenbasis, NonFiniteValue
from frvkit.spectra import (EDGE_LAYER_SPACINGS, RADIAL_BINS, REPORT_SCHEMA, ComparisonReport, ReportThresholds,
                            eig_general, estimate_border_radius, finite_size_margin,
                            overlap_compare, overlap_correlator, planar_compare, planar_histogram,
                            radial_compare, radial_histogram, sample_cue_sum_synthetic,
                            sample_uniform_disc, support_area, validate_report)


def _matches(values, expected, tol=1e-10):
    values = list(values)
    for e in expected:
        distances = [abs(v - e) for v in values]
        k = int(np.argmin(distances))
        if distances[k] > tol:
            return False
        values.pop(k)
    return not values


def test_eig_general_examples():
    assert _matches(eig_general(np.diag([1.0, 2.0j, -3.0])), [1.0, 2.0j, -3.0])
    assert _matches(eig_general(np.array([[0.0, 1.0], [-1.0, 0.0]])), [1j, -1j])
    companion = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    roots = [np.exp(2j * np.pi * k / 3) for k in range(3)]
    assert _matches(eig_general(companion), roots)


def test_eig_general_rejects_bad_input():
    with pytest.raises(NonFiniteValue):
        eig_general(np.array([[np.nan, 0.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        eig_general(np.zeros((2, 3)))


def test_histogram_masses(rng):
    points = sample_uniform_disc(1.0, 5000, rng)
    assert radial_histogram(points, 1.0 + 1e-9, 10).mass == pytest.approx(1.0)
    hist = planar_histogram(points, (-1.0, 1.0, -2.0, 2.0), 8)
    assert hist.mass == pytest.approx(1.0)
    assert hist.counts.shape == (8, 8)
    assert hist.cell_area == pytest.approx(0.25 * 0.5)


def test_planar_histogram_rows_follow_y():
    hist = planar_histogram(np.array([0.9 + 0.0j]), (-1.0, 1.0, -1.0, 1.0), 2)
    # row 0 is y in [-1, 0), column 1 is x in [0, 1]
    assert hist.counts[0, 1] == 0
    assert hist.counts[1, 1] == 1


def test_synthetic_cloud_follows_the_radial_law(rng):
    model = CueSum(2)
    points = sample_cue_sum_synthetic(model, 1_000_000, rng)
    assert np.all(np.abs(points) <= model.border_radius + 1e-12)
    report = radial_compare(points, model, bins=30)
    assert report.l1_distance < 0.01
    assert report.outside_fraction == 0.0
    assert abs(report.origin_bin_deviation) < 0.03
    assert report.border_estimate == pytest.approx(math.sqrt(2.0), abs=0.01)


def test_large_m_diffusion_is_nearly_uniform(rng):
    model = CueSum.diffusion(1000)
    points = sample_uniform_disc(1.0, 1_000_000, rng)
    report = radial_compare(points, model, bins=30)
    assert report.l1_distance < 0.02


def test_radial_compare_needs_a_circular_model(rng):
    with pytest.raises(ValueError):
        radial_compare(sample_uniform_disc(1.0, 100, rng), CueGue(2.0))
    with pytest.raises(EmptyCloud):
        radial_compare(np.array([], dtype=complex), CueSum(2))


def test_planar_compare_synthetic_cue_cue(rng):
    model = CueSum(2)
    points = sample_cue_sum_synthetic(model, 2_000_000, rng)
    report = planar_compare(points, model, bins=16)
    assert report.kind == 'planar'
    assert report.inside_hole_fraction is None
    assert report.max_bin_deviation < 0.05 * report.max_density
    assert report.outside_fraction == 0.0


def test_planar_compare_hole_fraction():
    points = np.array([0.0, 0.1j, 1.2, -1.2, 0.88j])
    report = planar_compare(points, CueGue(0.5), bins=10)
    assert report.inside_hole_fraction == pytest.approx(0.4)
    assert report.outside_fraction == 0.0
    assert planar_compare(points, CueGue(2.0), bins=10).inside_hole_fraction is None


def test_support_area_and_finite_size_margin():
    assert support_area(cue_gue_border(0.5)) == pytest.approx(math.pi * (1.5 / 1.25 - 0.75))
    assert support_area(model_border(CueSum(2))) == pytest.approx(2.0 * math.pi)
    assert finite_size_margin(CueSum(2), 200) == pytest.approx(EDGE_LAYER_SPACINGS * math.sqrt(2.0 * math.pi / 200))
    assert finite_size_margin(CueGue(2.0), 400) == pytest.approx(finite_size_margin(CueGue(2.0), 100) / 2.0)
    assert finite_size_margin(CueSum(2), None) == 0.0


def test_planar_edge_margin_follows_the_cloud_size():
    model = CueGue(2.0)
    # 0.5i lies beyond the 1.05-inflated ellipse, whose y semi-axis is 1/sqrt(5)
    cloud = EigCloud(EnsembleConfig(model, n=4, samples=1, seed=0), np.array([0.0, 0.5j, 1.0, -1.0]))
    assert planar_compare(cloud.points, model, bins=10).outside_fraction == pytest.approx(0.25)
    assert planar_compare(cloud, model, bins=10, edge_margin=0.0).outside_fraction == pytest.approx(0.25)

    report = planar_compare(cloud, model, bins=10)
    assert report.edge_margin == pytest.approx(finite_size_margin(model, 4))
    assert report.outside_fraction == 0.0
    assert report.to_dict()['edgeMargin'] == report.edge_margin


def test_hole_fraction_shrinks_with_the_edge_margin():
    points = np.array([0.0, 0.7, 1.2])
    assert planar_compare(points, CueGue(0.5), bins=10).inside_hole_fraction == pytest.approx(2.0 / 3.0)
    assert planar_compare(points, CueGue(0.5), bins=10, edge_margin=0.2).inside_hole_fraction == \
        pytest.approx(1.0 / 3.0)


def test_radial_default_bins_resolve_the_edge(rng):
    points = sample_cue_sum_synthetic(CueSum(2), 20_000, rng)
    report = radial_compare(points, CueSum(2))
    assert report.bins == RADIAL_BINS == 10
    assert report.l1_distance < 0.05


def test_estimate_border_radius_is_scale_aware(rng):
    model = CueSum(3, 0.5)
    points = sample_cue_sum_synthetic(model, 200_000, rng)
    assert estimate_border_radius(points, model) == pytest.approx(model.border_radius, rel=0.01)


def test_validate_report_statuses():
    report = ComparisonReport(kind='radial', model='cue+cue', l1_distance=0.03, max_bin_deviation=0.01,
                              outside_fraction=0.0, inside_hole_fraction=None, bins=25, point_count=100,
                              max_density=0.3, origin_bin_deviation=0.05)
    validate_report(report, ReportThresholds(max_l1=0.05, max_outside_fraction=0.01,
                                             origin_relative_tolerance=0.1))
    assert report.status == 'pass'
    assert [v['metric'] for v in report.validations] == ['l1_distance', 'outside_fraction',
                                                         'origin_relative_deviation']

    validate_report(report, ReportThresholds(max_l1=0.01))
    assert report.status == 'fail'
    assert report.validations[0]['status'] == 'fail'

    data = report.to_dict()
    assert data['schema'] == REPORT_SCHEMA
    assert data['l1Distance'] == 0.03
    assert data['insideHoleFraction'] is None


def test_overlaps_of_normal_matrices_are_one(rng):
    q, _ = np.linalg.qr(rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6)))
    _, overlaps = overlap_correlator(q)
    assert np.allclose(overlaps, 1.0, atol=1e-10)


def test_overlap_of_triangular_matrix():
    _, overlaps = overlap_correlator(np.array([[1.0, 3.0], [0.0, 2.0]]))
    assert np.allclose(overlaps, 10.0)


def test_ill_conditioned_eigenbasis():
    jordan = np.array([[0.0, 1.0], [1e-30, 0.0]])
    with pytest.raises(IllConditionedEigenbasis):
        overlap_correlator(jordan)
    values, overlaps = overlap_correlator(jordan, strict=False)
    assert values.size == 2
    assert np.all(overlaps > 1e10)


def test_overlap_compare_shape():
    eigenvalues = np.array([0.1, 0.5j, -1.0, 1.3])
    overlaps = np.ones(4)
    comparison = overlap_compare(eigenvalues, overlaps, n=4, model=CueSum(2), bins=5)
    assert len(comparison['estimate']) == 5
    assert len(comparison['edges']) == 6
    expected_integral = 2.0 * math.log(2.0) - 1.0
    assert comparison['theory_integral'] == pytest.approx(expected_integral, rel=1e-6)
    assert comparison['estimate_integral'] == pytest.approx(4.0 / 16.0)
    with pytest.raises(ValueError):
        overlap_compare(eigenvalues, overlaps, n=4, model=CueGue(1.0))
