"""Dense 2x2 / 4x4 primitives: Pauli operators, the qubit Hamiltonian and its
closed-form eigen-decomposition, density-matrix validation and the partial
trace over the auxiliary qubit.

Basis convention: index 0 is |up>, index 1 is |down>. Composite operators use
system-first ordering, i.e. ``kron(system, auxiliary)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvalidStateError, ParameterError

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
# lowering operator |down><up|
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.conj().T

TRACE_TOL = 1e-10
HERMITIAN_TOL = 1e-12
EIGEN_TOL = 1e-10


def _check_a(a):
    if not a > 0:
        raise ParameterError(f"a must be positive, got {a}")


def hamiltonian_q(tau, a, d):
    """Dimensionless qubit Hamiltonian (a/2)(d sz + sx).

    ``tau`` is accepted for signature symmetry only; time enters through d.
    """
    _check_a(a)
    return 0.5 * a * (d * SIGMA_Z + SIGMA_X)


def mixing_angle(d):
    """theta(d) = atan2(1, d), continuous on (0, pi) along any sweep."""
    return np.arctan2(1.0, d)


@dataclass(frozen=True)
class EigenFrame:
    tau: float
    e_plus: float
    e_minus: float
    ket_plus: np.ndarray
    ket_minus: np.ndarray
    p_plus: np.ndarray
    p_minus: np.ndarray
    gap: float

    @property
    def unitary(self):
        """Columns |+>, |->; maps eigenbasis components to the computational basis."""
        return np.column_stack([self.ket_plus, self.ket_minus])

    def to_eigenbasis(self, m):
        v = self.unitary
        return v.conj().T @ m @ v


def eigenframe(tau, a, d) -> EigenFrame:
    """Instantaneous eigenvectors, energies and projectors of ``hamiltonian_q``."""
    _check_a(a)
    theta = mixing_angle(d)
    c, s = np.cos(0.5 * theta), np.sin(0.5 * theta)
    ket_p = np.array([c, s], dtype=complex)
    ket_m = np.array([-s, c], dtype=complex)
    half_gap = 0.5 * a * np.sqrt(1.0 + d * d)
    return EigenFrame(
        tau=float(tau), e_plus=half_gap, e_minus=-half_gap,
        ket_plus=ket_p, ket_minus=ket_m,
        p_plus=np.outer(ket_p, ket_p.conj()),
        p_minus=np.outer(ket_m, ket_m.conj()),
        gap=2.0 * half_gap)


def projector_velocity(tau, sweep, schedule=None):
    """Return (dP-/dtau, Tr{P+ (dP-/dtau)^2}) along the sweep.

    dP-/dd = -(sz - d sx) / (2 (1 + d^2)^{3/2}), chained with dq/dtau.
    """
    from .schedules import d_of_tau, make_schedule

    if schedule is None:
        schedule = make_schedule(sweep)
    q = float(schedule.q(tau))
    qd = float(schedule.qdot(tau))
    d = d_of_tau(q, sweep.d_i, sweep.d_f)
    u = 1.0 + d * d
    dpm_dd = -(SIGMA_Z - d * SIGMA_X) / (2.0 * u ** 1.5)
    pdot = qd * (sweep.d_f - sweep.d_i) * dpm_dd
    frame = eigenframe(tau, sweep.a, d)
    trace_scalar = float(np.trace(frame.p_plus @ pdot @ pdot).real)
    return pdot, trace_scalar


def is_hermitian(m, tol=HERMITIAN_TOL):
    return bool(np.max(np.abs(m - m.conj().T)) < tol)


def validate_density(rho, trace_tol=TRACE_TOL, herm_tol=HERMITIAN_TOL,
                     eig_tol=EIGEN_TOL):
    """Raise InvalidStateError unless ``rho`` is a unit-trace Hermitian PSD matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] not in (2, 4):
        raise DimensionError(f"density matrix must be 2x2 or 4x4, got {rho.shape}")
    if abs(np.trace(rho) - 1.0) >= trace_tol:
        raise InvalidStateError(f"trace {np.trace(rho).real:.3e} differs from 1")
    if not is_hermitian(rho, herm_tol):
        raise InvalidStateError("density matrix is not Hermitian")
    lo = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
    if lo < -eig_tol:
        raise InvalidStateError(f"negative eigenvalue {lo:.3e}")
    return rho


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray
    basis: str = "computational"

    def __post_init__(self):
        if self.basis not in ("computational", "instantaneous"):
            raise ParameterError(f"unknown basis tag {self.basis!r}")
        m = validate_density(self.matrix).copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self):
        return self.matrix.shape[0]


def as_matrix(rho):
    return rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


def partial_trace_aux(chi):
    """Trace out the second (auxiliary) qubit of a 4x4 operator."""
    chi = as_matrix(chi)
    if chi.shape != (4, 4):
        raise DimensionError(f"expected a 4x4 operator, got {chi.shape}")
    return np.einsum("iaja->ij", chi.reshape(2, 2, 2, 2))


def compose(rho_s, rho_a):
    """System-first product state rho_S (x) rho_A."""
    return np.kron(as_matrix(rho_s), as_matrix(rho_a))


def thermal_aux_state(nbar):
    """Gibbs state of the auxiliary qubit with excited population n/(2n+1)."""
    p_up = nbar / (2.0 * nbar + 1.0)
    return np.diag([p_up, 1.0 - p_up]).astype(complex)


def to_real_vector(m):
    flat = np.ascontiguousarray(m).ravel()
    return np.concatenate([flat.real, flat.imag])


def from_real_vector(y, n):
    n2 = n * n
    return (y[..., :n2] + 1j * y[..., n2:]).reshape(y.shape[:-1] + (n, n))
