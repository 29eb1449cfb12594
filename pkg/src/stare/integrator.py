"""Adaptive integration of density-matrix equations of motion.

Problems with a flat parameter representation go to the compiled
Dormand-Prince driver and kernels. Anything else (a callable dephasing
profile, a tabulated schedule, a user generator, or ``use_kernel=False``)
runs the same driver uncompiled on top of the numpy generators.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import kernels
from ._jit import python_function
from .core import (DensityMatrix, as_matrix, eigenframe, from_real_vector,
                   to_real_vector, validate_density)
from .errors import IntegrationError, ParameterError, StiffnessError
from .liouvillians import LiouvillianKind, LiouvillianSpec, RateProfile, rhs
from .schedules import SweepSpec, d_of_tau, make_schedule


RTOL_FLOOR = 100 * np.finfo(float).eps


@dataclass(frozen=True)
class IntegrationConfig:
    rtol: float = 1e-10
    atol: float = 1e-12
    max_step: float = 0.0          # 0 means unbounded
    initial_step: float = 0.0      # 0 means automatic
    output_grid: Union[int, Sequence[float]] = 101
    max_steps: int = 50_000_000
    use_kernel: bool = True

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ParameterError("rtol and atol must be positive")
        if self.rtol < RTOL_FLOOR:
            raise ParameterError(f"rtol below {RTOL_FLOOR:g} is beneath double precision")
        if self.max_step < 0 or self.initial_step < 0:
            raise ParameterError("step bounds must be non-negative")

    def grid(self, t0, t1):
        if isinstance(self.output_grid, (int, np.integer)):
            if self.output_grid < 2:
                raise ParameterError("output grid needs at least 2 points")
            g = np.linspace(t0, t1, int(self.output_grid))
            g[-1] = t1
            return g
        g = np.asarray(self.output_grid, dtype=float)
        if g.ndim != 1 or g.size == 0:
            raise ParameterError("output grid must be a non-empty 1-d sequence")
        if np.any(np.diff(g) < 0):
            raise ParameterError("output grid must be sorted")
        if g[0] < t0 or g[-1] > t1:
            raise ParameterError("output grid leaves the integration span")
        return g


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray                    # (n_t, dim, dim)
    trace_deviation: np.ndarray
    min_eigenvalue: np.ndarray
    n_accepted: int = 0
    n_rejected: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def final(self):
        return self.states[-1]

    def density(self, k) -> DensityMatrix:
        return DensityMatrix(self.states[k])

    def max_trace_deviation(self):
        return float(np.max(self.trace_deviation))

    def lowest_eigenvalue(self):
        return float(np.min(self.min_eigenvalue))

    def conserved(self, tol=1e-8):
        """Trace within ``tol`` of 1 and eigenvalues above ``-tol`` everywhere."""
        return self.max_trace_deviation() < tol and self.lowest_eigenvalue() >= -tol


def diagnostics(states):
    tr = np.einsum("kii->k", states)
    herm = 0.5 * (states + np.conj(np.swapaxes(states, 1, 2)))
    return np.abs(tr - 1.0), np.linalg.eigvalsh(herm)[:, 0]


def _default_span(spec):
    if isinstance(spec, LiouvillianSpec) and spec.kind is LiouvillianKind.COMPOSITE:
        return spec.composite.t_i, spec.composite.t_f
    return 0.0, 1.0


def kernel_problem(spec: LiouvillianSpec):
    """``(rhs_kernel, params)`` for the compiled driver, or None."""
    if spec.kind is LiouvillianKind.COMPOSITE:
        return kernels.composite_rhs, spec.composite.kernel_params()
    sched = spec.schedule
    if spec.b_func is not None or sched.kernel_code is None:
        return None
    b = 0.0 if spec.kind is LiouvillianKind.UNITARY else spec.sweep.b
    p = np.concatenate([[float(sched.kernel_code)], sched.kernel_params,
                        [spec.sweep.a, b, float(spec.rate_profile.code)]])
    return kernels.qubit_rhs, p


def _python_rhs(f, n):
    def wrapped(t, y, p):
        return to_real_vector(f(t, from_real_vector(y, n)))
    return wrapped


def evolve(liouvillian: Union[LiouvillianSpec, Callable], rho0, span=None,
           config: Optional[IntegrationConfig] = None) -> Trajectory:
    """Integrate from ``rho0`` over ``span`` and sample on the output grid.

    ``liouvillian`` is a LiouvillianSpec or a plain generator ``f(t, rho)``.
    """
    config = config or IntegrationConfig()
    rho0 = validate_density(as_matrix(rho0))
    n = rho0.shape[0]
    if isinstance(liouvillian, LiouvillianSpec) and liouvillian.dim != n:
        raise ParameterError(f"state dimension {n} does not match generator")
    t0, t1 = span if span is not None else _default_span(liouvillian)
    t0, t1 = float(t0), float(t1)
    if not t1 > t0:
        raise ParameterError("integration span must have t_end > t_start")
    grid = config.grid(t0, t1)

    problem = None
    if isinstance(liouvillian, LiouvillianSpec) and config.use_kernel:
        problem = kernel_problem(liouvillian)
    if problem is not None:
        f, p = problem
        driver = kernels.dopri5
    else:
        gen = rhs(liouvillian) if isinstance(liouvillian, LiouvillianSpec) else liouvillian
        f, p = _python_rhs(gen, n), np.zeros(1)
        driver = python_function(kernels.dopri5)

    y0 = to_real_vector(rho0)
    h0 = config.initial_step
    if problem is None and h0 == 0.0:
        # the compiled step heuristic cannot call back into Python
        h0 = python_function(kernels._initial_step)(
            f, t0, y0, f(t0, y0, p), p, 1.0, config.rtol, config.atol)
    y_out, status, t_last, y_last, n_acc, n_rej = driver(
        f, t0, t1, y0, p, grid, config.rtol, config.atol, h0,
        config.max_step, config.max_steps)
    if status != kernels.OK:
        last = from_real_vector(np.asarray(y_last), n)
        if status == kernels.STEP_UNDERFLOW:
            raise StiffnessError(f"step size underflow at t={t_last:.6g}",
                                 t_last, last)
        raise IntegrationError(f"step budget exhausted at t={t_last:.6g}",
                               t_last, last)
    states = from_real_vector(y_out, n)
    dev, lo = diagnostics(states)
    return Trajectory(grid, states, dev, lo, int(n_acc), int(n_rej),
                      {"rtol": config.rtol, "atol": config.atol,
                       "compiled": problem is not None})


def ground_projector(tau, sweep: SweepSpec, schedule=None):
    schedule = schedule or make_schedule(sweep)
    d = d_of_tau(float(schedule.q(tau)), sweep.d_i, sweep.d_f)
    return eigenframe(tau, sweep.a, d).p_minus


def infidelity(rho, p_minus):
    return float(1.0 - np.trace(p_minus @ as_matrix(rho)).real)


def infidelity_final(traj: Trajectory, sweep: SweepSpec) -> float:
    """1 - Tr{P-(tau=1) rho_final}; P-(1) depends on d_f only."""
    return infidelity(traj.final, eigenframe(1.0, sweep.a, sweep.d_f).p_minus)


def infidelity_series(traj: Trajectory, sweep: SweepSpec, schedule=None):
    """1 - Tr{P-(tau) rho(tau)} along a dimensionless trajectory."""
    schedule = schedule or make_schedule(sweep)
    return np.array([infidelity(r, ground_projector(t, sweep, schedule))
                     for t, r in zip(traj.times, traj.states)])


def initial_ground_state(sweep: SweepSpec):
    return eigenframe(0.0, sweep.a, sweep.d_i).p_minus


def run_protocol(sweep: SweepSpec, dephasing=True, config=None,
                 rate_profile=RateProfile.CONSTANT):
    """Evolve P-(0) to tau=1 with the sweep's schedule; return (trajectory, infidelity)."""
    if dephasing and sweep.b > 0:
        spec = LiouvillianSpec.stare(sweep, rate_profile=rate_profile)
    else:
        spec = LiouvillianSpec.unitary(sweep)
    traj = evolve(spec, initial_ground_state(sweep), (0.0, 1.0), config)
    return traj, infidelity_final(traj, sweep)
