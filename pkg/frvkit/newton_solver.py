#!/usr/bin/env python3
"""
FRVKit Newton Solver
Damped Gauss-Newton iteration with a central finite-difference Jacobian

Used for every functional inversion in the package: CUE Blue's functions and
the quaternion addition law.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

try:
    from .errors import FRVError
except ImportError:
    from errors import FRVError

logger = logging.getLogger(__name__)

ResidualFunction = Callable[[np.ndarray], np.ndarray]

DEFAULT_TOLERANCE = 1e-10
DEFAULT_TARGET = 1e-13
DEFAULT_MAX_ITER = 100
DEFAULT_MAX_HALVINGS = 20
DEFAULT_STEP_SCALE = 1e-7


@dataclass
class NewtonResult:
    """Outcome of a damped Newton run"""
    x: np.ndarray
    residual: float
    iterations: int
    converged: bool
    residual_history: List[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            'x': self.x.tolist(),
            'residual': self.residual,
            'iterations': self.iterations,
            'converged': self.converged,
        }


def evaluate_residual(fun: ResidualFunction, x: np.ndarray) -> Tuple[Optional[np.ndarray], float]:
    """
    Evaluate fun(x) and its max-norm

    Failures inside fun (singular quaternions, poles, overflow) count as an
    infinite residual so the caller rejects the trial point.
    """
    try:
        with np.errstate(over='raise', invalid='raise', divide='raise'):
            values = np.asarray(fun(x), dtype=float)
    except (FRVError, ZeroDivisionError, FloatingPointError, OverflowError, ValueError) as e:
        logger.debug(f"residual evaluation failed at {x}: {e}")
        return None, float('inf')
    if not np.all(np.isfinite(values)):
        return None, float('inf')
    return values, float(np.max(np.abs(values))) if values.size else 0.0


def numerical_jacobian(fun: ResidualFunction, x: np.ndarray,
                       f0: Optional[np.ndarray] = None,
                       step_scale: float = DEFAULT_STEP_SCALE) -> np.ndarray:
    """
    Jacobian J_ij = df_i/dx_j by central differences

    The step for x_j is step_scale * max(1, |x_j|). When one side of the
    stencil cannot be evaluated, a one-sided difference against f0 is used.

    Args:
        fun: residual map R^n -> R^m
        x: evaluation point
        f0: fun(x), required for the one-sided fallback
        step_scale: relative step

    Returns:
        (m, n) array
    """
    x = np.asarray(x, dtype=float)
    if f0 is None:
        f0, _ = evaluate_residual(fun, x)
        if f0 is None:
            raise FloatingPointError(f"residual undefined at Jacobian centre {x}")

    jac = np.zeros((f0.size, x.size))
    for j in range(x.size):
        h = step_scale * max(1.0, abs(x[j]))
        x_plus = x.copy()
        x_minus = x.copy()
        x_plus[j] += h
        x_minus[j] -= h
        f_plus, _ = evaluate_residual(fun, x_plus)
        f_minus, _ = evaluate_residual(fun, x_minus)
        if f_plus is not None and f_minus is not None:
            jac[:, j] = (f_plus - f_minus) / (2.0 * h)
        elif f_plus is not None:
            jac[:, j] = (f_plus - f0) / h
        elif f_minus is not None:
            jac[:, j] = (f0 - f_minus) / h
    return jac


def damped_newton(fun: ResidualFunction, x0,
                  tol: float = DEFAULT_TOLERANCE,
                  target: float = DEFAULT_TARGET,
                  max_iter: int = DEFAULT_MAX_ITER,
                  max_halvings: int = DEFAULT_MAX_HALVINGS,
                  step_scale: float = DEFAULT_STEP_SCALE,
                  project: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> NewtonResult:
    """
    Solve fun(x) = 0 in the least-squares sense

    Steps come from numpy lstsq on the finite-difference Jacobian, so
    over-determined systems (more residuals than unknowns) are allowed. A
    step is halved until the max-norm residual decreases; if max_halvings
    halvings do not help, the iteration stops.

    Args:
        fun: residual map
        x0: starting point
        tol: residual below which the result counts as converged
        target: residual at which iteration stops early
        max_iter: iteration cap
        max_halvings: step halvings per iteration
        step_scale: finite-difference relative step
        project: optional map applied to every trial point (gauge fixing)

    Returns:
        NewtonResult; converged is residual < tol
    """
    x = np.array(x0, dtype=float)
    if project is not None:
        x = project(x)
    f, norm = evaluate_residual(fun, x)
    history = [norm]
    iterations = 0

    if f is None:
        return NewtonResult(x=x, residual=norm, iterations=0, converged=False, residual_history=history)

    while iterations < max_iter and norm > target:
        iterations += 1
        jac = numerical_jacobian(fun, x, f0=f, step_scale=step_scale)
        step, *_ = np.linalg.lstsq(jac, -f, rcond=None)

        accepted = False
        damping = 1.0
        for _ in range(max_halvings + 1):
            trial = x + damping * step
            if project is not None:
                trial = project(trial)
            f_trial, norm_trial = evaluate_residual(fun, trial)
            if norm_trial < norm:
                x, f, norm = trial, f_trial, norm_trial
                accepted = True
                break
            damping *= 0.5

        history.append(norm)
        if not accepted:
            logger.debug(f"Newton stalled after {iterations} iterations at residual {norm:.3e}")
            break

    return NewtonResult(x=x, residual=norm, iterations=iterations,
                        converged=norm < tol, residual_history=history)
