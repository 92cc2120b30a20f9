import os

import numpy as np
import pytest

from frvkit.closed_models import CueGue, CueSum
from frvkit.ensembles import (GENERATOR_PROTOCOL, GOLDEN_COUNT, GOLDEN_SEED, EigCloud, EnsembleConfig,
                              box_muller_normals, golden_uniforms, golden_vectors, load_golden_vectors,
                              model_matrix, realize_model, sample_cue, sample_gue, substream,
                              write_golden_vectors)

GOLDEN_PATH = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
                           'data', 'golden_stream.json')


def test_substreams_are_reproducible_and_independent():
    first = substream(7, 3, 1).random(5)
    again = substream(7, 3, 1).random(5)
    other_matrix = substream(7, 3, 2).random(5)
    other_sample = substream(7, 4, 1).random(5)
    assert np.array_equal(first, again)
    assert not np.array_equal(first, other_matrix)
    assert not np.array_equal(first, other_sample)


def test_substream_rejects_out_of_range_keys():
    with pytest.raises(ValueError):
        substream(-1, 0, 0)
    with pytest.raises(ValueError):
        substream(0, 2 ** 32, 0)


def test_box_muller_moments():
    values = box_muller_normals(substream(1, 0, 0), 200001)
    assert values.size == 200001
    assert abs(values.mean()) < 0.01
    assert values.std() == pytest.approx(1.0, abs=0.01)


def test_sample_cue_is_unitary():
    u = sample_cue(12, substream(3, 0, 0))
    assert np.allclose(u @ u.conj().T, np.eye(12), atol=1e-12)


def test_sample_cue_is_haar_on_average():
    # E|U_11|^2 = 1/n and the eigenvalue phases average to zero
    n = 4
    entries = []
    phases = []
    for s in range(1000):
        u = sample_cue(n, substream(11, s, 0))
        entries.append(abs(u[0, 0]) ** 2)
        phases.append(np.mean(np.linalg.eigvals(u)))
    assert np.mean(entries) == pytest.approx(1.0 / n, abs=0.03)
    assert abs(np.mean(phases)) < 0.05


def test_sample_gue_is_hermitian_with_semicircle_scale():
    h = sample_gue(200, substream(5, 0, 1))
    assert np.allclose(h, h.conj().T)
    eigenvalues = np.linalg.eigvalsh(h)
    assert eigenvalues.max() < 2.2
    assert eigenvalues.min() > -2.2
    assert np.mean(eigenvalues ** 2) == pytest.approx(1.0, abs=0.05)


def test_model_matrix_composition():
    config = EnsembleConfig(CueSum(3, 0.5), n=6, samples=1, seed=9)
    expected = 0.5 * sum(sample_cue(6, substream(9, 0, j)) for j in range(3))
    assert np.allclose(model_matrix(config, 0), expected)

    config = EnsembleConfig(CueGue(0.75), n=6, samples=1, seed=9)
    expected = sample_cue(6, substream(9, 0, 0)) + 0.75 * sample_gue(6, substream(9, 0, 1))
    assert np.allclose(model_matrix(config, 0), expected)


def test_realize_model_is_deterministic_and_thread_independent():
    config = EnsembleConfig(CueSum(2), n=8, samples=5, seed=123)
    single = realize_model(config, threads=1)
    pooled = realize_model(config, threads=3)
    assert single.count == 40
    assert np.array_equal(single.points, pooled.points)
    assert np.all(single.radii <= 2.0 + 1e-9)


def test_cue_gue_cloud_size():
    cloud = realize_model(EnsembleConfig(CueGue(0.5), n=10, samples=3, seed=1))
    assert cloud.points.shape == (30,)


def test_config_validation_and_hash():
    config = EnsembleConfig(CueSum(2), n=20, samples=4, seed=1)
    assert config.config_hash() == EnsembleConfig(CueSum(2), n=20, samples=4, seed=1).config_hash()
    assert config.config_hash() != EnsembleConfig(CueSum(2), n=20, samples=4, seed=2).config_hash()
    assert config.to_dict()['model'] == 'cue+cue'
    with pytest.raises(ValueError):
        EnsembleConfig(CueSum(2), n=1, samples=4, seed=1)
    with pytest.raises(ValueError):
        EnsembleConfig(CueSum(2), n=4, samples=0, seed=1)


def test_eig_cloud_checks_size():
    config = EnsembleConfig(CueSum(2), n=4, samples=2, seed=1)
    with pytest.raises(ValueError):
        EigCloud(config, np.zeros(7, dtype=complex))


def test_golden_vectors_round_trip(tmp_path):
    path = str(tmp_path / 'golden.json')
    record = write_golden_vectors(path)
    loaded = load_golden_vectors(path)
    assert loaded == record
    assert len(loaded['values']) == GOLDEN_COUNT
    assert loaded['values'] == golden_vectors(GOLDEN_SEED, GOLDEN_COUNT)
    assert loaded['uniforms'] == golden_uniforms(GOLDEN_SEED, GOLDEN_COUNT)
    assert load_golden_vectors(str(tmp_path / 'missing.json')) is None


def test_committed_golden_vectors():
    record = load_golden_vectors(GOLDEN_PATH)
    assert record is not None
    assert record['generator'] == GENERATOR_PROTOCOL
    count = len(record['values'])
    assert count == GOLDEN_COUNT
    # the Philox words are exact; Box-Muller goes through libm
    assert golden_uniforms(record['seed'], count) == record['uniforms']
    assert golden_vectors(record['seed'], count) == pytest.approx(record['values'], rel=1e-13, abs=1e-15)


def test_golden_stream_first_block():
    # counter 1, key (0, 42): first word 0xea7... >> 11 scaled to [0, 1)
    assert golden_uniforms(42, 2) == [0.91590800619224377, 0.8085446837203567]
