"""Explicit time stepping of the minimizer-transport initial value problem."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .exceptions import BvpSolveError, IndefiniteHessianError, StationarityError
from .problems.base import as_vector
from .sensitivity import ParameterLine, post_optimality_apply

STATIONARITY_TOL = 1e-8


class Scheme(str, enum.Enum):
    FORWARD_EULER = "euler"
    HEUN = "heun"
    RK4 = "rk4"

    @property
    def stages(self) -> int:
        return {Scheme.FORWARD_EULER: 1, Scheme.HEUN: 2, Scheme.RK4: 4}[self]


class MarchStatus(str, enum.Enum):
    COMPLETED = "completed"
    ABORTED_INDEFINITE = "aborted_indefinite"
    ABORTED_NONFINITE = "aborted_nonfinite"


@dataclass(frozen=True)
class MarchConfig:
    num_steps: int
    scheme: Scheme = Scheme.FORWARD_EULER
    record_trajectory: bool = False

    def __post_init__(self):
        if self.num_steps < 1:
            raise ValueError("num_steps must be >= 1")
        object.__setattr__(self, "scheme", Scheme(self.scheme))


@dataclass
class Trajectory:
    """Iterates of one march from the nominal parameters to a sample.

    ``min_eigenvalues[n]`` is the smallest Hessian eigenvalue seen among the
    stage evaluations of step n.  ``rhs_values`` holds the first-stage
    right-hand side per step when the march was run with record_trajectory.
    ``left_basin`` flags any iterate that exited the problem's basin hint;
    marching continues regardless, since the hint is analytical.
    """

    times: np.ndarray
    states: np.ndarray
    rhs_evals: int
    min_eigenvalues: np.ndarray
    status: MarchStatus
    left_basin: bool = False
    rhs_values: np.ndarray | None = field(default=None, repr=False)
    failure_time: float | None = None

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


def march(
    problem,
    start_minimizer,
    line: ParameterLine,
    config: MarchConfig,
    stationarity_tol: float = STATIONARITY_TOL,
) -> Trajectory:
    """March the minimizer from line.start to line.end in pseudo-time.

    ``start_minimizer`` must already be stationary at the starting
    parameters; the marcher refuses to repair a bad initial condition
    silently.  Forward Euler applies exactly m_{n+1} = m_n + h f(t_n, m_n)
    with h = 1/num_steps; the final state approximates the minimizer at
    line.end.
    """
    m = as_vector(start_minimizer, "start_minimizer").copy()
    value, g = problem.objective_gradient(m, line.start)
    if np.linalg.norm(g) > stationarity_tol * (1.0 + abs(value)):
        raise StationarityError(
            f"start_minimizer is not stationary at the line start: "
            f"||g||={np.linalg.norm(g)!r} exceeds "
            f"{stationarity_tol!r}*(1+|J|)"
        )

    N = config.num_steps
    scheme = config.scheme
    times = [0.0]
    states = [m]
    min_eigs: list[float] = []
    rhs_log: list[np.ndarray] = []
    rhs_evals = 0
    status = MarchStatus.COMPLETED
    left_basin = not problem.in_basin(m)
    failure_time = None

    direction = line.direction
    h = 1.0 / N

    def stage(t: float, state: np.ndarray) -> tuple[np.ndarray, float]:
        nonlocal rhs_evals
        apply = post_optimality_apply(problem, state, line.at(t), direction)
        rhs_evals += 1
        return apply.result, apply.hessian_min_eigenvalue

    for n in range(N):
        t_n = n / N
        try:
            k1, eig = stage(t_n, m)
            step_min_eig = eig
            if scheme is Scheme.FORWARD_EULER:
                increment = k1
            elif scheme is Scheme.HEUN:
                k2, eig = stage((n + 1) / N, m + h * k1)
                step_min_eig = min(step_min_eig, eig)
                increment = 0.5 * (k1 + k2)
            else:  # RK4
                t_mid = (n + 0.5) / N
                k2, eig = stage(t_mid, m + 0.5 * h * k1)
                step_min_eig = min(step_min_eig, eig)
                k3, eig = stage(t_mid, m + 0.5 * h * k2)
                step_min_eig = min(step_min_eig, eig)
                k4, eig = stage((n + 1) / N, m + h * k3)
                step_min_eig = min(step_min_eig, eig)
                increment = (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        except IndefiniteHessianError as err:
            status = MarchStatus.ABORTED_INDEFINITE
            failure_time = err.t if err.t is not None else t_n
            break
        except BvpSolveError:
            status = MarchStatus.ABORTED_NONFINITE
            failure_time = t_n
            break

        m_next = m + h * increment
        if not np.all(np.isfinite(m_next)):
            status = MarchStatus.ABORTED_NONFINITE
            failure_time = t_n
            break

        min_eigs.append(step_min_eig)
        if config.record_trajectory:
            rhs_log.append(k1)
        m = m_next
        left_basin = left_basin or not problem.in_basin(m)
        times.append((n + 1) / N)
        states.append(m)

    return Trajectory(
        times=np.asarray(times),
        states=np.vstack(states),
        rhs_evals=rhs_evals,
        min_eigenvalues=np.asarray(min_eigs),
        status=status,
        left_basin=left_basin,
        rhs_values=np.vstack(rhs_log) if rhs_log else None,
        failure_time=failure_time,
    )


def march_error_vs_oracle(
    problem,
    start_minimizer,
    line: ParameterLine,
    N_list,
    oracle_minimizer,
    scheme: Scheme = Scheme.FORWARD_EULER,
) -> list[tuple[int, float]]:
    """March with each step count and measure the gap to a reference minimizer.

    Failed marches are recorded with error NaN so downstream slope fits can
    exclude and count them.
    """
    oracle = as_vector(oracle_minimizer, "oracle_minimizer")
    out = []
    for N in N_list:
        traj = march(problem, start_minimizer, line, MarchConfig(N, scheme))
        if traj.status is MarchStatus.COMPLETED:
            err = float(np.linalg.norm(traj.final_state - oracle))
        else:
            err = float("nan")
        out.append((int(N), err))
    return out
