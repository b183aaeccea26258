"""Finite-difference verification of derivatives and FD-based second derivatives."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateStepError

DEFAULT_FD_STEP = 1e-6


def _steps(x: np.ndarray, base: float) -> np.ndarray:
    # per-coordinate step, scaled away from zero components
    return base * np.maximum(1.0, np.abs(x))


def fd_gradient(func, x: np.ndarray, base_step: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Central differences of a scalar function."""
    x = np.asarray(x, dtype=float)
    h = _steps(x, base_step)
    out = np.empty_like(x)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h[i]
        xm[i] -= h[i]
        out[i] = (func(xp) - func(xm)) / (2.0 * h[i])
    return out


def fd_jacobian(vecfunc, x: np.ndarray, base_step: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Central differences of a vector function, one column per coordinate of x."""
    x = np.asarray(x, dtype=float)
    h = _steps(x, base_step)
    cols = []
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h[i]
        xm[i] -= h[i]
        cols.append((vecfunc(xp) - vecfunc(xm)) / (2.0 * h[i]))
    return np.column_stack(cols)


def _max_rel_error(analytic: np.ndarray, fd: np.ndarray) -> float:
    denom = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(fd)))
    return float(np.max(np.abs(analytic - fd) / denom))


@dataclass(frozen=True)
class DerivativeCheckReport:
    """Worst relative discrepancies between supplied derivatives and FD."""

    max_rel_error_gradient: float
    max_rel_error_hessian: float
    max_rel_error_mixed: float
    fd_step: float

    def passed(self, tol: float) -> bool:
        return (
            self.max_rel_error_gradient <= tol
            and self.max_rel_error_hessian <= tol
            and self.max_rel_error_mixed <= tol
        )

    def worst(self) -> float:
        return max(
            self.max_rel_error_gradient,
            self.max_rel_error_hessian,
            self.max_rel_error_mixed,
        )


def check_derivatives(
    problem,
    m: np.ndarray,
    theta: np.ndarray,
    fd_step: float = DEFAULT_FD_STEP,
) -> DerivativeCheckReport:
    """Compare a problem's derivative evaluators against central differences.

    The gradient is checked against differences of the objective; the Hessian
    and the mixed derivative are checked against differences of the gradient.
    Evaluation failures at perturbed points (e.g. a PDE solve breaking down)
    propagate rather than being skipped.
    """
    if fd_step <= 0:
        raise ValueError("fd_step must be positive")
    m = np.asarray(m, dtype=float)
    theta = np.asarray(theta, dtype=float)

    g = problem.gradient(m, theta)
    g_fd = fd_gradient(lambda mm: problem.objective(mm, theta), m, fd_step)

    H = problem.hessian(m, theta)
    H_fd = fd_jacobian(lambda mm: problem.gradient(mm, theta), m, fd_step)

    B = problem.mixed(m, theta)
    B_fd = fd_jacobian(lambda tt: problem.gradient(m, tt), theta, fd_step)

    return DerivativeCheckReport(
        max_rel_error_gradient=_max_rel_error(g, g_fd),
        max_rel_error_hessian=_max_rel_error(H, H_fd),
        max_rel_error_mixed=_max_rel_error(B, B_fd),
        fd_step=fd_step,
    )


def fd_second_derivatives(
    gradient,
    m: np.ndarray,
    theta: np.ndarray,
    fd_step: float = DEFAULT_FD_STEP,
) -> tuple[np.ndarray, np.ndarray]:
    """Second derivatives from central differences of an exact gradient.

    ``gradient(m, theta)`` must return dJ/dm.  Returns the decision-space
    Hessian, symmetrized as (H + H^T)/2, and the mixed derivative matrix.
    """
    if fd_step <= 0:
        raise ValueError("fd_step must be positive")
    m = np.asarray(m, dtype=float)
    theta = np.asarray(theta, dtype=float)

    H_raw = fd_jacobian(lambda mm: gradient(mm, theta), m, fd_step)
    if np.all(H_raw == 0.0):
        raise DegenerateStepError(
            f"differencing the gradient with fd_step={fd_step!r} returned an "
            "all-zero Hessian"
        )
    B = fd_jacobian(lambda tt: gradient(m, tt), theta, fd_step)
    return 0.5 * (H_raw + H_raw.T), B
