#!/usr/bin/env python3
"""
FRVKit Quaternion Algebra
2x2 quaternion arithmetic in (a, b) coordinates

A quaternion (a, b) stands for the complex matrix

    [[a,     i*conj(b)],
     [i*b,   conj(a)  ]]

Only the pair (a, b) is stored; the matrix is rebuilt on demand.
"""

import cmath
import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

try:
    from .errors import NonFiniteValue, SingularQuaternion
except ImportError:
    from errors import NonFiniteValue, SingularQuaternion

logger = logging.getLogger(__name__)

# det below this raises instead of producing Inf
SINGULAR_DET_THRESHOLD = 1e-300


@dataclass(frozen=True)
class Quaternion:
    """Quaternion (a, b); immutable value type"""
    a: complex
    b: complex = 0j

    def __post_init__(self):
        a = complex(self.a)
        b = complex(self.b)
        if not (cmath.isfinite(a) and cmath.isfinite(b)):
            raise NonFiniteValue(f"non-finite quaternion component: a={a}, b={b}")
        object.__setattr__(self, 'a', a)
        object.__setattr__(self, 'b', b)

    @classmethod
    def identity(cls) -> 'Quaternion':
        return cls(1.0, 0.0)

    @classmethod
    def diag(cls, z: complex) -> 'Quaternion':
        """diag(z, conj(z)), the Z_eps target with the regulator at 0"""
        return cls(z, 0.0)

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> 'Quaternion':
        """Read (a, b) from the first column of a 2x2 matrix in quaternion form"""
        return cls(complex(m[0, 0]), complex(m[1, 0]) / 1j)

    @classmethod
    def from_components(cls, values) -> 'Quaternion':
        """Inverse of components(): (Re a, Im a, Re b, Im b)"""
        return cls(complex(values[0], values[1]), complex(values[2], values[3]))

    @property
    def det(self) -> float:
        return abs(self.a) ** 2 + abs(self.b) ** 2

    @property
    def b_squared(self) -> float:
        return abs(self.b) ** 2

    def components(self) -> np.ndarray:
        return np.array([self.a.real, self.a.imag, self.b.real, self.b.imag])

    def to_matrix(self) -> np.ndarray:
        a, b = self.a, self.b
        return np.array([[a, 1j * b.conjugate()],
                         [1j * b, a.conjugate()]], dtype=complex)

    def dagger(self) -> 'Quaternion':
        """Hermitian conjugate; stays in quaternion form"""
        return Quaternion(self.a.conjugate(), -self.b)

    def scaled(self, k: float) -> 'Quaternion':
        """Multiply by a real scalar (complex scalars leave the quaternion form)"""
        return Quaternion(k * self.a, k * self.b)

    def __add__(self, other: 'Quaternion') -> 'Quaternion':
        return Quaternion(self.a + other.a, self.b + other.b)

    def __sub__(self, other: 'Quaternion') -> 'Quaternion':
        return Quaternion(self.a - other.a, self.b - other.b)

    def __neg__(self) -> 'Quaternion':
        return Quaternion(-self.a, -self.b)

    def __mul__(self, other: 'Quaternion') -> 'Quaternion':
        return q_mul(self, other)

    def max_abs_diff(self, other: 'Quaternion') -> float:
        """Matrix max-norm of the difference"""
        return max(abs(self.a - other.a), abs(self.b - other.b))

    def to_dict(self) -> dict:
        return {'a_re': self.a.real, 'a_im': self.a.imag,
                'b_re': self.b.real, 'b_im': self.b.imag}


def q_mul(p: Quaternion, q: Quaternion) -> Quaternion:
    """
    2x2 matrix product in quaternion coordinates

    Args:
        p: left factor
        q: right factor

    Returns:
        Quaternion encoding p @ q
    """
    a = p.a * q.a - p.b.conjugate() * q.b
    b = p.b * q.a + p.a.conjugate() * q.b
    return Quaternion(a, b)


def q_inv(q: Quaternion) -> Quaternion:
    """
    Inverse (conj(a)/det, -b/det)

    Raises:
        SingularQuaternion: det below SINGULAR_DET_THRESHOLD
    """
    det = q.det
    if det < SINGULAR_DET_THRESHOLD:
        raise SingularQuaternion(f"cannot invert quaternion with det={det:.3e}")
    return Quaternion(q.a.conjugate() / det, -q.b / det)


def q_eigenvalues(q: Quaternion) -> Tuple[complex, complex]:
    """Conjugate eigenvalue pair Re(a) +/- i*sqrt(Im(a)^2 + |b|^2)"""
    imag = math.sqrt(q.a.imag ** 2 + abs(q.b) ** 2)
    return complex(q.a.real, imag), complex(q.a.real, -imag)
