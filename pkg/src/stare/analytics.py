"""Closed-form and quadrature results for the dephasing-assisted sweep.

Notation: d = d(q(tau)), u = 1 + d^2, D = d_f - d_i and
w = <+|d/dtau|-> = q' D / (2u). The off-diagonal operator S+- = |+><-|
decays under the dimensionless generator with rate mu = -b - i a sqrt(u),
and S-+ with conj(mu).
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Chebyshev
from scipy import integrate, optimize

from .core import eigenframe
from .errors import ParameterError, QuadratureError
from .schedules import (Schedule, ScheduleKind, SweepSpec, d_of_tau,
                        make_schedule, theta_span, x_of_d, xi_value)

QUAD_EPSABS = 1e-12
QUAD_EPSREL = 1e-9
CHEB_NODES = 2048
LOG_GUARD = 1e-9


def _schedule(schedule, spec):
    if schedule is None:
        return make_schedule(spec)
    if isinstance(schedule, (str, ScheduleKind)):
        return make_schedule(spec, schedule)
    return schedule


def mass_function(q_value, spec: SweepSpec):
    """M(q) = b D^2 / [4 u^2 (a^2 u + b^2)]."""
    d = d_of_tau(np.asarray(q_value, dtype=float), spec.d_i, spec.d_f)
    u = 1.0 + d * d
    dd = spec.d_f - spec.d_i
    return spec.b * dd * dd / (4.0 * u * u * (spec.a ** 2 * u + spec.b ** 2))


def _crossing_points(sched: Schedule, spec: SweepSpec):
    """tau where d = 0, used as a quadrature breakpoint."""
    q0 = -spec.d_i / (spec.d_f - spec.d_i)
    if not 0.0 < q0 < 1.0:
        return None
    try:
        return [optimize.brentq(lambda t: float(sched.q(t)) - q0, 0.0, 1.0,
                                xtol=1e-14)]
    except ValueError:
        return None


def _quad(f, lo, hi, points=None, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL):
    if points is not None:
        points = [p for p in points if lo < p < hi] or None
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = integrate.quad(f, lo, hi, epsabs=epsabs, epsrel=epsrel,
                                    limit=1000, points=points)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(str(exc)) from exc
    return val


def infidelity_leading(schedule, spec: SweepSpec) -> float:
    """2 int_0^1 M(q) q'^2 dtau."""
    sched = _schedule(schedule, spec)
    if spec.b == 0.0:
        return 0.0

    def f(t):
        return 2.0 * float(mass_function(sched.q(t), spec)) * float(sched.qdot(t)) ** 2

    return _quad(f, 0.0, 1.0, _crossing_points(sched, spec))


@dataclass(frozen=True)
class _Local:
    d: np.ndarray
    u: np.ndarray
    w: np.ndarray
    wdot: np.ndarray
    mu: np.ndarray
    mudot: np.ndarray


def _local(tau, sched: Schedule, spec: SweepSpec) -> _Local:
    tau = np.asarray(tau, dtype=float)
    q = np.asarray(sched.q(tau), dtype=float)
    qd = np.asarray(sched.qdot(tau), dtype=float)
    qdd = np.asarray(sched.qddot(tau), dtype=float)
    dd = spec.d_f - spec.d_i
    d = d_of_tau(q, spec.d_i, spec.d_f)
    u = 1.0 + d * d
    w = qd * dd / (2.0 * u)
    wdot = qdd * dd / (2.0 * u) - qd * qd * dd * dd * d / (u * u)
    root = np.sqrt(u)
    mu = -spec.b - 1j * spec.a * root
    mudot = -1j * spec.a * d * qd * dd / root
    return _Local(d, u, w, wdot, mu, mudot)


def _j_integrand(tau, sched, spec):
    loc = _local(tau, sched, spec)
    return 2.0 * loc.mu.real / np.abs(loc.mu) ** 2 * loc.w ** 2


class _JInterpolant:
    """Running integral J(tau) from a Chebyshev interpolant of its integrand."""

    def __init__(self, sched, spec, nodes=CHEB_NODES):
        cheb = Chebyshev.interpolate(lambda t: _j_integrand(t, sched, spec),
                                     nodes - 1, domain=[0.0, 1.0])
        self._prim = cheb.integ(lbnd=0.0)

    def __call__(self, tau):
        return self._prim(tau)


def running_j(tau, schedule, spec: SweepSpec) -> float:
    """J(tau) = int_0^tau 2 Re(mu) w^2 / |mu|^2 by adaptive quadrature."""
    sched = _schedule(schedule, spec)
    if tau == 0.0 or spec.b == 0.0:
        return 0.0
    return _quad(lambda t: float(_j_integrand(t, sched, spec)), 0.0, float(tau),
                 _crossing_points(sched, spec), epsrel=1e-10)


def _wx(loc: _Local, jval):
    """w * x1: coefficient of S+- in b2, written without dividing by w."""
    return (2.0 * jval * loc.w / loc.mu - loc.w * loc.mudot / loc.mu ** 3
            + loc.wdot / loc.mu ** 2)


def _a2_integrand(tau, sched, spec, jfun):
    loc = _local(tau, sched, spec)
    return 2.0 * (loc.w * _wx(loc, jfun(tau))).real


def correction_from_expansion(schedule, spec: SweepSpec, jfun=None) -> float:
    """C = -int_0^1 w^2 (x1 + x2): the a2 contribution to the infidelity."""
    sched = _schedule(schedule, spec)
    jfun = jfun or _JInterpolant(sched, spec)
    return -_quad(lambda t: float(_a2_integrand(t, sched, spec, jfun)), 0.0, 1.0,
                  _crossing_points(sched, spec), epsrel=1e-10)


def correction_C(schedule, spec: SweepSpec) -> float:
    """Second-order infidelity correction by quadrature, constant b only."""
    if not spec.b > 0:
        raise ParameterError("the correction term needs b > 0")
    sched = _schedule(schedule, spec)
    jfun = _JInterpolant(sched, spec)
    a2, b2 = spec.a ** 2, spec.b ** 2
    dd = spec.d_f - spec.d_i

    def f(t):
        qd = float(sched.qdot(t))
        d = d_of_tau(float(sched.q(t)), spec.d_i, spec.d_f)
        u = 1.0 + d * d
        v = a2 * u + b2
        poly = 3.0 * a2 * a2 * u * u - 3.0 * a2 * b2 * u - 2.0 * b2 * b2
        bracket = 2.0 * jfun(t) - d * dd * qd * poly / (spec.b * u * v * v)
        return 2.0 * qd * qd * float(mass_function(sched.q(t), spec)) * bracket

    return _quad(f, 0.0, 1.0, _crossing_points(sched, spec), epsrel=1e-10)


def correction_C_closed_form(spec: SweepSpec) -> float:
    """Correction for the optimal schedule, logarithmic bracket included."""
    for d in (spec.d_i, spec.d_f):
        if abs(d) < LOG_GUARD:
            raise ParameterError("closed-form correction is singular at d = 0")
    if not spec.b > 0:
        raise ParameterError("the correction term needs b > 0")
    imin = i_min(spec)
    d_i, d_f, a, b = spec.d_i, spec.d_f, spec.a, spec.b
    x_i, x_f = float(x_of_d(d_i, a, b)), float(x_of_d(d_f, a, b))
    bracket = (5.0 * np.log((d_f * x_i) / (d_i * x_f))
               - np.log((d_f ** 2 + 1.0) / (d_i ** 2 + 1.0))
               + 2.0 * (x_f ** 2 / d_f ** 2 - x_i ** 2 / d_i ** 2))
    return -imin ** 2 - imin / b * bracket


def i_min_value(a, b, d_i, d_f) -> float:
    return 2.0 * xi_value(a, b, d_i, d_f)


def i_min(spec: SweepSpec) -> float:
    """Minimum leading-order infidelity (theta_f - theta_i)^2 / (2b)."""
    return i_min_value(spec.a, spec.b, spec.d_i, spec.d_f)


def t_min(gamma, target_infidelity, g0, d_i, d_f) -> float:
    """Shortest transfer time reaching ``target_infidelity`` at leading order."""
    if not gamma > 0:
        raise ParameterError("gamma must be positive")
    if not 0.0 < target_infidelity < 1.0:
        raise ParameterError("target infidelity must lie in (0, 1)")
    if not g0 > 0:
        raise ParameterError("g0 must be positive")
    # x(d) depends on T only through gamma / g0
    span = theta_span(1.0, gamma / g0, d_i, d_f)
    return span ** 2 / (2.0 * gamma * target_infidelity)


@dataclass(frozen=True)
class ExpansionCoefficients:
    tau: float
    a0: np.ndarray
    a1: np.ndarray
    b1: np.ndarray
    a2: np.ndarray
    b2: np.ndarray
    j_value: float
    lambda_plus: complex
    lambda_minus: complex


def expansion_at(tau, schedule, spec: SweepSpec) -> ExpansionCoefficients:
    """Adiabatic expansion of the state up to second order at ``tau``."""
    sched = _schedule(schedule, spec)
    tau = float(tau)
    loc = _local(tau, sched, spec)
    d = float(loc.d)
    frame = eigenframe(tau, spec.a, d)
    pp, pm = frame.p_plus, frame.p_minus
    s_pm = np.outer(frame.ket_plus, frame.ket_minus.conj())
    s_mp = s_pm.conj().T
    mu = complex(loc.mu)
    w = float(loc.w)
    jval = running_j(tau, sched, spec)
    jfun = _JInterpolant(sched, spec)
    a2_int = 0.0 if tau == 0.0 else _quad(
        lambda t: float(_a2_integrand(t, sched, spec, jfun)), 0.0, tau,
        _crossing_points(sched, spec), epsrel=1e-10)
    wx1 = complex(_wx(loc, jval))
    diff = pm - pp
    return ExpansionCoefficients(
        tau=tau, a0=pm, a1=diff * jval,
        b1=(w / mu) * s_pm + (w / mu.conjugate()) * s_mp,
        a2=diff * a2_int,
        b2=wx1 * s_pm + wx1.conjugate() * s_mp,
        j_value=jval,
        lambda_plus=complex(-spec.b, spec.a * np.sqrt(1.0 + d * d)),
        lambda_minus=complex(-spec.b, -spec.a * np.sqrt(1.0 + d * d)))


def reconstruct_rho(coeffs: ExpansionCoefficients):
    return coeffs.a0 + coeffs.a1 + coeffs.b1 + coeffs.a2 + coeffs.b2


def initial_slip_shift(schedule, spec: SweepSpec) -> float:
    """Population offset left by starting exactly in P-(0).

    The expansion at tau = 0 contains b1(0) != 0, so a run started from the
    bare projector carries a transient that decays at rate b and leaves
    -2 w(0)^2 Re(1/mu(0)^2) in the excited branch. It is second order and
    vanishes when b^2 = a^2 (1 + d_i^2).
    """
    loc = _local(0.0, _schedule(schedule, spec), spec)
    return float(-2.0 * loc.w ** 2 * (1.0 / complex(loc.mu) ** 2).real)


class LZKind(str, enum.Enum):
    LZ_FORMULA = "lz"
    WEAK_DEPHASING = "weak"
    STRONG_DEPHASING = "strong"


def lz_asymptotics(kind, A2, B=0.0) -> float:
    """Linear-sweep closed forms in terms of A^2 = g0^2/eps and B = gamma/g0."""
    kind = LZKind(kind)
    if not A2 > 0:
        raise ParameterError("A2 must be positive")
    if B < 0:
        raise ParameterError("B must be non-negative")
    if kind is LZKind.LZ_FORMULA:
        return float(np.exp(-0.5 * np.pi * A2))
    if kind is LZKind.WEAK_DEPHASING:
        return 3.0 * np.pi / 16.0 * B / A2
    if B == 0.0:
        return float("inf")
    return np.pi / 4.0 / (A2 * B)
