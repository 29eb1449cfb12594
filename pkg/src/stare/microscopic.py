"""Qubit coupled to a thermally damped auxiliary qubit, in physical units.

The sweep is s(t) = g0 d(q(tau)) with tau = (t - t_i)/T; by default the
endpoints follow the linear-sweep convention s = g0^2 t. In the weak-coupling
Born-Markov limit the reduced qubit dynamics becomes projector dephasing with
rate gamma(t) = Gamma_re(0) Delta(t)^2 / 2.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .core import (SIGMA_X, SIGMA_Z, compose, eigenframe, partial_trace_aux,
                   thermal_aux_state)
from .errors import ParameterError
from .integrator import IntegrationConfig, Trajectory, diagnostics, evolve, infidelity
from .liouvillians import LiouvillianSpec
from .schedules import ScheduleKind, SweepSpec, d_of_tau, make_schedule

VALIDITY_THRESHOLD = 0.1


@dataclass(frozen=True)
class CompositeParams:
    g0: float = 1.0
    omega_a: float = 1.0
    kappa: float = 1.0
    nbar: float = 0.0
    x0: float = 0.0
    t_i: float = -20.0
    t_f: float = 20.0
    schedule: ScheduleKind = ScheduleKind.LINEAR
    s_i: Optional[float] = None
    s_f: Optional[float] = None
    # dephasing strength that shapes q_OS; default gamma at the crossing times T
    schedule_b: Optional[float] = None
    _sched: object = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "schedule", ScheduleKind.parse(self.schedule))
        for name in ("g0", "omega_a", "kappa"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")
        if self.nbar < 0:
            raise ParameterError("nbar must be non-negative")
        if self.x0 < 0:
            raise ParameterError("x0 must be non-negative")
        if not self.t_f > self.t_i:
            raise ParameterError("t_f must exceed t_i")
        if self.s_i is None:
            object.__setattr__(self, "s_i", self.g0 ** 2 * self.t_i)
        if self.s_f is None:
            object.__setattr__(self, "s_f", self.g0 ** 2 * self.t_f)
        if not self.s_f > self.s_i:
            raise ParameterError("s_f must exceed s_i")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            object.__setattr__(self, "_sched", make_schedule(self.sweep_spec()))

    def with_(self, **changes) -> "CompositeParams":
        return replace(self, **changes)

    @property
    def T(self):
        return self.t_f - self.t_i

    @property
    def d_i(self):
        return self.s_i / self.g0

    @property
    def d_f(self):
        return self.s_f / self.g0

    @property
    def gamma0(self):
        """Dephasing rate at the crossing, where the gap equals g0."""
        return 0.5 * gamma_re_zero(self) * self.g0 ** 2

    @property
    def schedule_obj(self):
        return self._sched

    @property
    def schedule_fallback(self):
        return self._sched.fallback

    def sweep_spec(self) -> SweepSpec:
        b = self.schedule_b if self.schedule_b is not None else self.gamma0 * self.T
        return SweepSpec(self.g0 * self.T, b, self.d_i, self.d_f, self.schedule)

    def tau(self, t):
        return (t - self.t_i) / self.T

    def d_at(self, t):
        return d_of_tau(float(self._sched.q(self.tau(t))), self.d_i, self.d_f)

    def system_hamiltonian(self, t):
        """H_S(t) = (s(t) sz + g0 sx) / 2."""
        return 0.5 * (self.g0 * self.d_at(t) * SIGMA_Z + self.g0 * SIGMA_X)

    def ground_projector(self, t):
        return eigenframe(self.tau(t), 1.0, self.d_at(t)).p_minus

    def kernel_params(self):
        sched = self._sched
        return np.concatenate([[float(sched.kernel_code)], sched.kernel_params,
                               [self.g0, self.omega_a, self.kappa, self.nbar,
                                self.x0, self.t_i, self.T]])


def gamma_re_zero(params: CompositeParams) -> float:
    """Zero-frequency spectral density of the auxiliary qubit's sx correlations."""
    k = params.kappa * (2.0 * params.nbar + 1.0)
    return params.x0 ** 2 * k / (0.25 * k * k + params.omega_a ** 2)


def gamma_rate(t, params: CompositeParams) -> float:
    """gamma(t) = Gamma_re(0) Delta(t)^2 / 2 with Delta = g0 sqrt(1 + d^2)."""
    d = params.d_at(t)
    return 0.5 * gamma_re_zero(params) * params.g0 ** 2 * (1.0 + d * d)


def thermal_occupation(omega_a, theta) -> float:
    """Bose factor 1/(exp(omega_a/theta) - 1); zero at theta = 0."""
    if theta < 0:
        raise ParameterError("temperature must be non-negative")
    if theta == 0:
        return 0.0
    return float(1.0 / np.expm1(omega_a / theta))


def correlation_time(params: CompositeParams) -> float:
    """tau_A = 1 / [kappa (2 nbar + 1)]."""
    return 1.0 / (params.kappa * (2.0 * params.nbar + 1.0))


@dataclass(frozen=True)
class ValidityReport:
    markov_ratio: float
    adiabatic_ratio: float
    regime1_ratio: float
    regime2_ratio: float
    threshold: float = VALIDITY_THRESHOLD

    @property
    def markov_ok(self):
        return self.markov_ratio < self.threshold

    @property
    def adiabatic_ok(self):
        return self.adiabatic_ratio < self.threshold

    @property
    def regime1_ok(self):
        return self.regime1_ratio < self.threshold

    @property
    def regime2_ok(self):
        return self.regime2_ratio < self.threshold

    @property
    def all_ok(self):
        return self.markov_ok and self.adiabatic_ok and self.regime1_ok and self.regime2_ok

    def as_dict(self):
        return {
            "markov_ratio": self.markov_ratio, "markov_ok": self.markov_ok,
            "adiabatic_ratio": self.adiabatic_ratio, "adiabatic_ok": self.adiabatic_ok,
            "regime1_ratio": self.regime1_ratio, "regime1_ok": self.regime1_ok,
            "regime2_ratio": self.regime2_ratio, "regime2_ok": self.regime2_ok,
            "threshold": self.threshold,
        }


def validity_report(params: CompositeParams, T=None, gamma=None,
                    threshold=VALIDITY_THRESHOLD) -> ValidityReport:
    """Born-Markov and adiabatic-reservoir conditions at the crossing time.

    Everything is evaluated at tau = 1/2 (t = 0 for a symmetric window).
    ``T`` overrides the duration, ``gamma`` the crossing dephasing rate.
    """
    T = params.T if T is None else float(T)
    if not T > 0:
        raise ParameterError("T must be positive")
    tau_a = correlation_time(params)
    sched = params.schedule_obj
    q0 = float(sched.q(0.5))
    qd0 = float(sched.qdot(0.5))
    dd = params.d_f - params.d_i
    d0 = d_of_tau(q0, params.d_i, params.d_f)
    root = np.sqrt(1.0 + d0 * d0)
    sdot = params.g0 * dd * qd0 / T
    gap = params.g0 * root
    if gamma is None:
        gamma = 0.5 * gamma_re_zero(params) * gap ** 2
    a = params.g0 * T
    b = gamma * T
    x0 = params.x0
    ddot0 = abs(dd * qd0)
    with np.errstate(divide="ignore"):
        regime1 = (b / a) / x0 if x0 > 0 else float("inf")
        regime2 = (b / a) * ddot0 / (x0 ** 2 * a) if x0 > 0 else float("inf")
    return ValidityReport(
        markov_ratio=(x0 * params.g0 * tau_a) ** 2,
        adiabatic_ratio=float(abs(sdot) / root / gap * tau_a),
        regime1_ratio=float(regime1), regime2_ratio=float(regime2),
        threshold=threshold)


@dataclass
class CompositeRun:
    full: Trajectory
    reduced: Trajectory
    infidelity: np.ndarray

    @property
    def final_infidelity(self):
        return float(self.infidelity[-1])


def initial_composite_state(params: CompositeParams):
    """Qubit ground state at t_i times the auxiliary Gibbs state."""
    return compose(params.ground_projector(params.t_i), thermal_aux_state(params.nbar))


def run_composite(params: CompositeParams, config: Optional[IntegrationConfig] = None,
                  rho0=None) -> CompositeRun:
    """Integrate the composite equation and reduce to the qubit."""
    spec = LiouvillianSpec.for_composite(params)
    chi0 = initial_composite_state(params) if rho0 is None else rho0
    full = evolve(spec, chi0, (params.t_i, params.t_f), config)
    red_states = np.array([partial_trace_aux(c) for c in full.states])
    dev, lo = diagnostics(red_states)
    reduced = Trajectory(full.times, red_states, dev, lo, full.n_accepted,
                         full.n_rejected, dict(full.meta))
    series = np.array([infidelity(r, params.ground_projector(t))
                       for t, r in zip(full.times, red_states)])
    return CompositeRun(full, reduced, series)


def born_markov_reference(params: CompositeParams,
                          config: Optional[IntegrationConfig] = None) -> CompositeRun:
    """Dimensionless dephasing run with gamma(t) from the microscopic model.

    Returned on the same physical time grid as ``run_composite``; ``full`` and
    ``reduced`` are the same qubit trajectory.
    """
    from .liouvillians import RateProfile

    config = config or IntegrationConfig()
    sweep = SweepSpec(params.g0 * params.T, params.gamma0 * params.T,
                      params.d_i, params.d_f, params.schedule)
    spec = LiouvillianSpec(
        "stare", sweep=sweep, rate_profile=RateProfile.GAP_SQUARED,
        schedule=params.schedule_obj)
    t_grid = config.grid(params.t_i, params.t_f)
    tau_grid = (t_grid - params.t_i) / params.T
    tau_grid[0], tau_grid[-1] = 0.0, 1.0
    tau_cfg = replace(config, output_grid=tau_grid,
                      max_step=config.max_step / params.T if config.max_step else 0.0,
                      initial_step=config.initial_step / params.T if config.initial_step else 0.0)
    rho0 = params.ground_projector(params.t_i)
    traj = evolve(spec, rho0, (0.0, 1.0), tau_cfg)
    traj.times = t_grid
    series = np.array([infidelity(r, params.ground_projector(t))
                       for t, r in zip(t_grid, traj.states)])
    return CompositeRun(traj, traj, series)
