"""Right-hand sides of the three equations of motion.

These are the readable numpy versions. The integrator runs the compiled
equivalents in ``kernels`` whenever the problem can be expressed as a flat
parameter block, and these functions otherwise; the test suite checks the two
against each other.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .core import (IDENTITY, SIGMA_MINUS, SIGMA_X, SIGMA_Z, as_matrix,
                   eigenframe, hamiltonian_q)
from .errors import DimensionError, ParameterError
from .schedules import Schedule, SweepSpec, d_of_tau, make_schedule


class LiouvillianKind(str, enum.Enum):
    UNITARY = "unitary"
    STARE = "stare"
    COMPOSITE = "composite"


class RateProfile(str, enum.Enum):
    """How the dephasing rate b(tau) follows the sweep.

    ``GAP_SQUARED`` gives b(tau) = b (1 + d^2), the rate the microscopic model
    produces in the Born-Markov limit; ``b`` is then the value at the crossing.
    """

    CONSTANT = "constant"
    GAP_SQUARED = "gap_squared"

    @property
    def code(self):
        return (kernels.RATE_CONSTANT if self is RateProfile.CONSTANT
                else kernels.RATE_GAP_SQUARED)


@dataclass(frozen=True)
class LiouvillianSpec:
    kind: LiouvillianKind
    sweep: Optional[SweepSpec] = None
    composite: Optional[object] = None
    rate_profile: RateProfile = RateProfile.CONSTANT
    b_func: Optional[Callable] = None
    schedule: Optional[Schedule] = field(default=None, compare=False)

    def __post_init__(self):
        kind = LiouvillianKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "rate_profile", RateProfile(self.rate_profile))
        if kind is LiouvillianKind.COMPOSITE:
            if self.composite is None or self.sweep is not None:
                raise ParameterError("composite generator needs composite params only")
            return
        if self.sweep is None or self.composite is not None:
            raise ParameterError(f"{kind.value} generator needs a SweepSpec only")
        if self.schedule is None:
            object.__setattr__(self, "schedule", make_schedule(self.sweep))

    @classmethod
    def unitary(cls, sweep, schedule=None):
        return cls(LiouvillianKind.UNITARY, sweep=sweep, schedule=schedule)

    @classmethod
    def stare(cls, sweep, rate_profile=RateProfile.CONSTANT, b_func=None,
              schedule=None):
        return cls(LiouvillianKind.STARE, sweep=sweep, rate_profile=rate_profile,
                   b_func=b_func, schedule=schedule)

    @classmethod
    def for_composite(cls, params):
        return cls(LiouvillianKind.COMPOSITE, composite=params)

    @property
    def dim(self):
        return 4 if self.kind is LiouvillianKind.COMPOSITE else 2

    def d_at(self, tau):
        return d_of_tau(float(self.schedule.q(tau)), self.sweep.d_i, self.sweep.d_f)

    def rate_at(self, tau):
        """Dephasing strength b(tau); zero for unitary dynamics."""
        if self.kind is LiouvillianKind.UNITARY:
            return 0.0
        if self.b_func is not None:
            return float(self.b_func(tau))
        if self.rate_profile is RateProfile.GAP_SQUARED:
            d = self.d_at(tau)
            return self.sweep.b * (1.0 + d * d)
        return self.sweep.b


def _check_qubit(rho):
    rho = as_matrix(rho)
    if rho.shape != (2, 2):
        raise DimensionError(f"expected a 2x2 state, got {rho.shape}")
    return rho


def commutator(h, rho):
    return h @ rho - rho @ h


def rhs_unitary(tau, spec: LiouvillianSpec, rho):
    """-i [H_q(tau), rho]."""
    rho = _check_qubit(rho)
    h = hamiltonian_q(tau, spec.sweep.a, spec.d_at(tau))
    return -1j * commutator(h, rho)


def rhs_stare(tau, spec: LiouvillianSpec, rho):
    """-i [H_q, rho] - b(tau) (P+ rho P- + P- rho P+)."""
    rho = _check_qubit(rho)
    d = spec.d_at(tau)
    out = -1j * commutator(hamiltonian_q(tau, spec.sweep.a, d), rho)
    b = spec.rate_at(tau)
    if b != 0.0:
        f = eigenframe(tau, spec.sweep.a, d)
        out = out - b * (f.p_plus @ rho @ f.p_minus + f.p_minus @ rho @ f.p_plus)
    return out


def lindblad_dissipator(o, chi):
    """D(o) chi = o chi o^dag - {o^dag o, chi} / 2."""
    od = o.conj().T
    ood = od @ o
    return o @ chi @ od - 0.5 * (ood @ chi + chi @ ood)


def composite_hamiltonian(t, params):
    """H_S(t) (x) 1 + 1 (x) (omega_a sz / 2) + x0 H_S(t) (x) sx."""
    hs = params.system_hamiltonian(t)
    return (np.kron(hs, IDENTITY) + 0.5 * params.omega_a * np.kron(IDENTITY, SIGMA_Z)
            + params.x0 * np.kron(hs, SIGMA_X))


AUX_LOWERING = np.kron(IDENTITY, SIGMA_MINUS)


def rhs_composite(t, params, chi):
    """Qubit plus thermally damped auxiliary qubit, physical units."""
    chi = as_matrix(chi)
    if chi.shape != (4, 4):
        raise DimensionError(f"expected a 4x4 state, got {chi.shape}")
    h = composite_hamiltonian(t, params)
    out = -1j * commutator(h, chi)
    o = AUX_LOWERING
    out = out + params.kappa * (params.nbar + 1.0) * lindblad_dissipator(o, chi)
    out = out + params.kappa * params.nbar * lindblad_dissipator(o.conj().T, chi)
    return out


def rhs(spec: LiouvillianSpec):
    """Matrix-valued generator ``f(t, rho)`` for ``spec``."""
    if spec.kind is LiouvillianKind.UNITARY:
        return lambda t, rho: rhs_unitary(t, spec, rho)
    if spec.kind is LiouvillianKind.STARE:
        return lambda t, rho: rhs_stare(t, spec, rho)
    return lambda t, chi: rhs_composite(t, spec.composite, chi)
