"""
FRVKit Free Random Variables Toolkit
Quaternion free addition of non-Hermitian random matrices

This package provides:
- Quaternion algebra and the quaternion Green's/Blue's functions of the CUE and GUE
- Numerical inversion of the quaternion addition law for arbitrary free sums
- Closed-form densities, eigenvector correlators and borders of CUE+CUE,
  scaled sums of M CUE matrices and CUE+pGUE
- Reproducible Monte Carlo sampling and theory-versus-sample comparison reports
"""

__version__ = "1.0.0"

# Supported model grammar families
SUPPORTED_MODELS = [
    "cue+cue",
    "mcue:M[@scale]",
    "cue+gue:p",
]


def get_module_info():
    """
    Get information about the toolkit

    Returns:
        dict: version, supported models, acceptance suites and generator protocol
    """
    from .ensembles import GENERATOR_PROTOCOL
    from .verification_runner import VerificationRunner

    return {
        'version': __version__,
        'supported_models': SUPPORTED_MODELS,
        'acceptance_suites': list(VerificationRunner().suites),
        'generator': GENERATOR_PROTOCOL,
    }


from .errors import FRVError
from .quaternion import Quaternion, q_eigenvalues, q_inv, q_mul
from .addition_engine import BlueSum, CueTerm, GueTerm, InversionResult, invert_blue_at
from .closed_models import CueGue, CueSum, model_border, model_density, model_solution
from .ensembles import EigCloud, EnsembleConfig, realize_model
from .spectra import ComparisonReport, RunStatus, eig_general, planar_compare, radial_compare
from .results_exporter import ResultsExporter
from .verification_runner import VerificationRunner, VerificationRunResult

__all__ = [
    'FRVError',
    'Quaternion',
    'q_mul',
    'q_inv',
    'q_eigenvalues',
    'BlueSum',
    'CueTerm',
    'GueTerm',
    'InversionResult',
    'invert_blue_at',
    'CueSum',
    'CueGue',
    'model_border',
    'model_density',
    'model_solution',
    'EnsembleConfig',
    'EigCloud',
    'realize_model',
    'ComparisonReport',
    'eig_general',
    'radial_compare',
    'planar_compare',
    'ResultsExporter',
    'VerificationRunner',
    'VerificationRunResult',
    'RunStatus',
    'get_module_info',
    'SUPPORTED_MODELS',
]
