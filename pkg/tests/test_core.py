import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stare.core import (SIGMA_X, SIGMA_Z, DensityMatrix, compose, eigenframe,
                        hamiltonian_q, partial_trace_aux, projector_velocity,
                        thermal_aux_state, validate_density)
from stare.errors import DimensionError, InvalidStateError, ParameterError
from stare.schedules import SweepSpec, make_schedule

from oracles import random_density

reals = st.floats(-1e3, 1e3, allow_nan=False)
pos = st.floats(1e-3, 1e3, allow_nan=False)


def test_hamiltonian_at_crossing_is_sigma_x():
    assert np.allclose(hamiltonian_q(0.3, 2.0, 0.0), SIGMA_X, atol=0)


def test_hamiltonian_eigenvalues():
    ev = np.linalg.eigvalsh(hamiltonian_q(0.0, 10.0, 8.0))
    assert np.allclose(ev, [-5 * np.sqrt(65), 5 * np.sqrt(65)], rtol=1e-14)


@given(pos, reals)
def test_hamiltonian_traceless_hermitian(a, d):
    h = hamiltonian_q(0.0, a, d)
    assert abs(np.trace(h)) < 1e-12
    assert np.max(np.abs(h - h.conj().T)) == 0


def test_hamiltonian_rejects_nonpositive_a():
    with pytest.raises(ParameterError):
        hamiltonian_q(0.0, 0.0, 1.0)
    with pytest.raises(ParameterError):
        eigenframe(0.0, -1.0, 1.0)


def test_eigenframe_crossing():
    f = eigenframe(0.5, 3.0, 0.0)
    s = 1 / np.sqrt(2)
    assert np.allclose(f.ket_plus, [s, s], atol=1e-15)
    assert np.allclose(f.ket_minus, [-s, s], atol=1e-15)
    assert f.gap == pytest.approx(3.0, rel=1e-15)


def test_eigenframe_d_one():
    f = eigenframe(0.0, 2.0, 1.0)
    assert f.gap == pytest.approx(2 * np.sqrt(2), rel=1e-14)
    assert f.ket_plus[0].real == pytest.approx(np.cos(np.pi / 8), rel=1e-14)
    assert f.ket_plus[0].imag == 0


def test_eigenframe_decoupled_limit():
    f = eigenframe(0.0, 1.0, 1e6)
    assert np.allclose(f.ket_plus, [1, 0], atol=1e-6)
    assert np.allclose(f.ket_minus, [0, 1], atol=1e-6)


@given(pos, reals)
def test_eigenframe_invariants(a, d):
    f = eigenframe(0.0, a, d)
    eye = np.eye(2)
    assert np.max(np.abs(f.p_plus + f.p_minus - eye)) < 1e-12
    assert np.max(np.abs(f.p_plus @ f.p_plus - f.p_plus)) < 1e-12
    assert np.max(np.abs(f.p_minus @ f.p_minus - f.p_minus)) < 1e-12
    assert np.max(np.abs(f.p_plus @ f.p_minus)) < 1e-12
    assert abs(np.vdot(f.ket_plus, f.ket_minus)) < 1e-12
    assert f.gap > 0 and f.gap == pytest.approx(f.e_plus - f.e_minus)
    h = hamiltonian_q(0.0, a, d)
    scale = max(1.0, a * np.sqrt(1 + d * d))
    assert np.max(np.abs(h @ f.ket_plus - f.e_plus * f.ket_plus)) < 1e-12 * scale
    assert np.max(np.abs(h @ f.ket_minus - f.e_minus * f.ket_minus)) < 1e-12 * scale


def test_ground_state_positive_overlap_for_positive_d():
    for d in (1e-3, 0.5, 7.0, 300.0):
        assert eigenframe(0.0, 1.0, d).ket_plus[0].real >= 0


@pytest.mark.parametrize("n", [100, 1000, 10000])
def test_eigenvector_continuity_along_sweep(n):
    spec = SweepSpec(10.0, 30.0, -8.0, 8.0, "os")
    sched = make_schedule(spec)
    taus = np.linspace(0, 1, n)
    kets = [eigenframe(t, 10.0, -8 + 16 * sched.q(t)).ket_minus for t in taus]
    jumps = max(np.linalg.norm(k1 - k0) for k0, k1 in zip(kets, kets[1:]))
    # a phase flip would show up as a jump of order 2
    assert jumps < 40.0 / n


@given(st.floats(0.0, 1.0), st.sampled_from(["linear", "rc", "os"]))
def test_projector_velocity_hermitian_traceless(tau, kind):
    spec = SweepSpec(10.0, 30.0, -8.0, 8.0, kind)
    pdot, _ = projector_velocity(tau, spec)
    assert np.max(np.abs(pdot - pdot.conj().T)) < 1e-12
    assert abs(np.trace(pdot)) < 1e-12


def test_projector_velocity_compact_form():
    spec = SweepSpec(2.0, 0.0, -10.0, 10.0, "linear")
    _, tr = projector_velocity(0.5, spec)
    assert tr == pytest.approx(100.0, rel=1e-12)


@given(st.floats(0.02, 0.98), st.sampled_from(["linear", "rc", "os"]))
def test_projector_velocity_matches_trace_formula(tau, kind):
    spec = SweepSpec(10.0, 30.0, -8.0, 8.0, kind)
    sched = make_schedule(spec)
    _, tr = projector_velocity(tau, spec, sched)
    d = -8 + 16 * float(sched.q(tau))
    expect = float(sched.qdot(tau)) ** 2 * 256 / (4 * (1 + d * d) ** 2)
    assert tr == pytest.approx(expect, rel=1e-10, abs=1e-14)


def test_projector_velocity_finite_difference_is_second_order():
    spec = SweepSpec(10.0, 30.0, -8.0, 8.0, "os")
    sched = make_schedule(spec)

    def pm(t):
        return eigenframe(t, 10.0, -8 + 16 * float(sched.q(t))).p_minus

    tau = 0.37
    pdot, _ = projector_velocity(tau, spec, sched)
    errs = []
    for h in (1e-3, 1e-4):
        fd = (pm(tau + h) - pm(tau - h)) / (2 * h)
        errs.append(np.max(np.abs(pdot - fd)))
    assert errs[1] < errs[0] / 50


def test_partial_trace_product_state():
    rng = np.random.default_rng(1)
    rs, ra = random_density(rng, 2), random_density(rng, 2)
    assert np.allclose(partial_trace_aux(compose(rs, ra)), rs, atol=1e-15)


def test_partial_trace_mixed_and_bell():
    assert np.allclose(partial_trace_aux(np.eye(4) / 4), np.eye(2) / 2)
    psi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert np.allclose(partial_trace_aux(np.outer(psi, psi)), np.eye(2) / 2)


def test_partial_trace_dimension_error():
    with pytest.raises(DimensionError):
        partial_trace_aux(np.eye(2) / 2)


@given(st.integers(0, 2 ** 32 - 1), st.floats(0, 5))
def test_partial_trace_inverts_thermal_embedding(seed, nbar):
    rng = np.random.default_rng(seed)
    rs = random_density(rng, 2)
    out = partial_trace_aux(compose(rs, thermal_aux_state(nbar)))
    assert np.max(np.abs(out - rs)) < 1e-12
    chi = random_density(rng, 4)
    red = partial_trace_aux(chi)
    assert abs(np.trace(red) - np.trace(chi)) < 1e-12
    assert np.linalg.eigvalsh(red).min() > -1e-12


def test_density_validation():
    DensityMatrix(np.eye(2) / 2)
    with pytest.raises(InvalidStateError):
        validate_density(np.eye(2))
    with pytest.raises(InvalidStateError):
        validate_density(np.array([[1.5, 0], [0, -0.5]]))
    with pytest.raises(InvalidStateError):
        validate_density(np.array([[0.5, 1j], [0, 0.5]]))
    with pytest.raises(DimensionError):
        validate_density(np.eye(3) / 3)
    with pytest.raises(ParameterError):
        DensityMatrix(np.eye(2) / 2, basis="rotating")


def test_density_matrix_is_immutable():
    rho = DensityMatrix(np.diag([1.0, 0.0]))
    with pytest.raises(ValueError):
        rho.matrix[0, 0] = 0.0
