#!/usr/bin/env python3
"""
FRVKit Ensembles
Haar-unitary (CUE) and GUE sampling and assembly of model realizations

Random numbers come from counter-based Philox streams keyed by
(seed, sample index, matrix index). Gaussians are produced by Box-Muller
from the stream's uniform doubles, so a realization depends only on its
configuration and never on worker count or execution order.
"""

import hashlib
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np
import scipy.linalg

try:
    from .closed_models import CueGue, CueSum, ModelSpec
    from .errors import ConvergenceFailure
    from .spectra import eig_general
except ImportError:
    from closed_models import CueGue, CueSum, ModelSpec
    from errors import ConvergenceFailure
    from spectra import eig_general

logger = logging.getLogger(__name__)

GENERATOR_PROTOCOL = 'philox4x64-key(seed<<64|sample<<32|matrix)/box-muller/v1'
GOLDEN_SEED = 42
GOLDEN_COUNT = 8


def substream(seed: int, sample_index: int, matrix_index: int) -> np.random.Generator:
    """
    Independent generator for one matrix of one sample

    The 128-bit Philox key packs seed (64 bits), sample index (32 bits) and
    matrix index (32 bits).
    """
    if not 0 <= seed < 2 ** 64:
        raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
    if not (0 <= sample_index < 2 ** 32 and 0 <= matrix_index < 2 ** 32):
        raise ValueError(f"stream indices out of range: sample={sample_index}, matrix={matrix_index}")
    key = (seed << 64) | (sample_index << 32) | matrix_index
    return np.random.Generator(np.random.Philox(key=key))


def box_muller_normals(rng: np.random.Generator, count: int) -> np.ndarray:
    """
    Standard normals from pairs of uniforms

    Pair k uses u1 = 1 - U_{2k}, u2 = U_{2k+1} and yields
    r cos(2 pi u2), r sin(2 pi u2) with r = sqrt(-2 ln u1), interleaved.
    """
    pairs = (count + 1) // 2
    uniforms = rng.random(2 * pairs)
    u1 = 1.0 - uniforms[0::2]
    u2 = uniforms[1::2]
    radius = np.sqrt(-2.0 * np.log(u1))
    out = np.empty(2 * pairs)
    out[0::2] = radius * np.cos(2.0 * np.pi * u2)
    out[1::2] = radius * np.sin(2.0 * np.pi * u2)
    return out[:count]


def complex_ginibre(n: int, rng: np.random.Generator) -> np.ndarray:
    """n x n matrix of independent complex Gaussians, E|A_ij|^2 = 1"""
    values = box_muller_normals(rng, 2 * n * n)
    return (values[:n * n] + 1j * values[n * n:]).reshape(n, n) / math.sqrt(2.0)


def sample_cue(n: int, rng: np.random.Generator) -> np.ndarray:
    """
    Haar-distributed unitary matrix

    QR of a complex Ginibre matrix, with the columns of Q multiplied by the
    phases of diag(R); without that correction Q is not Haar.
    """
    if n < 1:
        raise ValueError(f"matrix size must be positive, got {n}")
    q, r = scipy.linalg.qr(complex_ginibre(n, rng))
    diagonal = np.diag(r)
    magnitude = np.abs(diagonal)
    phases = np.where(magnitude > 0, diagonal / np.where(magnitude > 0, magnitude, 1.0), 1.0)
    return q * phases[np.newaxis, :]


def sample_gue(n: int, rng: np.random.Generator) -> np.ndarray:
    """GUE matrix (A + A^dagger)/sqrt(2n); off-diagonal variance 1/n, spectrum on [-2, 2]"""
    if n < 1:
        raise ValueError(f"matrix size must be positive, got {n}")
    a = complex_ginibre(n, rng)
    return (a + a.conj().T) / math.sqrt(2.0 * n)


@dataclass(frozen=True)
class EnsembleConfig:
    """What to sample; identical configs give identical clouds"""
    model: ModelSpec
    n: int
    samples: int
    seed: int
    validate: bool = True

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if self.samples < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples}")

    def to_dict(self) -> Dict:
        return {
            'model': self.model.label,
            'n': self.n,
            'samples': self.samples,
            'seed': self.seed,
            'generator': GENERATOR_PROTOCOL,
        }

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


@dataclass
class EigCloud:
    """Pooled eigenvalues, ordered by (sample index, eigensolver order)"""
    config: EnsembleConfig
    points: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=complex)
        expected = self.config.n * self.config.samples
        if self.points.size != expected:
            raise ValueError(f"cloud has {self.points.size} points, expected n*samples = {expected}")

    @property
    def count(self) -> int:
        return int(self.points.size)

    @property
    def radii(self) -> np.ndarray:
        return np.abs(self.points)


def model_matrix(config: EnsembleConfig, sample_index: int) -> np.ndarray:
    """
    One realization of the model matrix

    CueSum: scale * (U_1 + ... + U_M), U_j from matrix stream j.
    CueGue: U + p*H, U from matrix stream 0 and H from matrix stream 1.
    Independent draws are used without extra conjugation.
    """
    model = config.model
    n = config.n
    if isinstance(model, CueSum):
        total = np.zeros((n, n), dtype=complex)
        for j in range(model.m):
            total += sample_cue(n, substream(config.seed, sample_index, j))
        return model.scale * total
    if isinstance(model, CueGue):
        u = sample_cue(n, substream(config.seed, sample_index, 0))
        if model.p == 0:
            return u
        return u + model.p * sample_gue(n, substream(config.seed, sample_index, 1))
    raise TypeError(f"unsupported model {model!r}")


def _sample_eigenvalues(config: EnsembleConfig, sample_index: int) -> np.ndarray:
    try:
        return eig_general(model_matrix(config, sample_index), verify=config.validate)
    except ConvergenceFailure as e:
        raise ConvergenceFailure(f"sample {sample_index}: {e}") from e


def realize_model(config: EnsembleConfig, threads: int = 1) -> EigCloud:
    """
    Sample the model and pool the eigenvalues

    Args:
        config: ensemble configuration
        threads: worker cap; the result is identical for any value

    Returns:
        EigCloud with n * samples points
    """
    logger.info(f"sampling {config.model.label}: n={config.n}, samples={config.samples}, "
                f"seed={config.seed}, threads={threads}")
    indices = range(config.samples)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            blocks = list(executor.map(lambda s: _sample_eigenvalues(config, s), indices))
    else:
        blocks = [_sample_eigenvalues(config, s) for s in indices]
    return EigCloud(config, np.concatenate(blocks))


def golden_uniforms(seed: int = GOLDEN_SEED, count: int = GOLDEN_COUNT) -> List[float]:
    """Uniform doubles behind the first `count` Gaussian draws; exact across platforms"""
    pairs = (count + 1) // 2
    return [float(v) for v in substream(seed, 0, 0).random(2 * pairs)]


def golden_vectors(seed: int = GOLDEN_SEED, count: int = GOLDEN_COUNT) -> List[float]:
    """First Gaussian draws of stream (seed, sample 0, matrix 0); libm may move the last ulp"""
    return [float(v) for v in box_muller_normals(substream(seed, 0, 0), count)]


def write_golden_vectors(path: str, seed: int = GOLDEN_SEED, count: int = GOLDEN_COUNT) -> Dict:
    record = {
        'generator': GENERATOR_PROTOCOL,
        'seed': seed,
        'sample': 0,
        'matrix': 0,
        'uniforms': [float(f"{v:.17g}") for v in golden_uniforms(seed, count)],
        'values': [float(f"{v:.17g}") for v in golden_vectors(seed, count)],
    }
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as handle:
        json.dump(record, handle, indent=2)
        handle.write('\n')
    logger.info(f"golden vectors written to {path}")
    return record


def load_golden_vectors(path: str) -> Optional[Dict]:
    if not os.path.exists(path):
        return None
    with open(path, 'r', encoding='utf-8') as handle:
        return json.load(handle)
