import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from wgmcqed.errors import (
    InvalidStateError,
    LayoutMismatchError,
    NonUniqueSteadyStateError,
)
from wgmcqed.hilbert import CCW, CW, EMITTER, OperatorMatrix, SpaceLayout, annihilation, embed, lower_sigma
from wgmcqed.model import GHZ, DriveSpec, SystemParams, bare_cavity_photon_number, build_collapse_ops, build_hamiltonian
from wgmcqed.solver import (
    DensityMatrix,
    Liouvillian,
    assemble_liouvillian,
    evolve,
    expectation,
    steady_state,
    truncation_residual,
)

NS = 1e-9


def cavity_liouvillian(params, drive, n_fock=3, basis="traveling"):
    layout = SpaceLayout.cavity_qd(n_fock)
    H = build_hamiltonian(params, drive, layout, basis)
    return assemble_liouvillian(H, build_collapse_ops(params, layout, basis))


def random_hermitian(rng, n):
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return m + m.conj().T


def random_density(rng, n):
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = m @ m.conj().T
    return rho / np.trace(rho)


def test_assembly_matches_dense_reference(rng):
    layout = SpaceLayout((2, 3))
    d = layout.total_dim
    H = random_hermitian(rng, d)
    C = [rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)) for _ in range(2)]
    L = assemble_liouvillian(OperatorMatrix(layout, H), [OperatorMatrix(layout, c) for c in C])
    rho = random_density(rng, d)
    expect = -1j * (H @ rho - rho @ H)
    for c in C:
        cdc = c.conj().T @ c
        expect += c @ rho @ c.conj().T - 0.5 * (cdc @ rho + rho @ cdc)
    np.testing.assert_allclose(L.apply(rho), expect, atol=1e-12)


def test_assembly_layout_mismatch():
    H = OperatorMatrix(SpaceLayout((2,)), np.eye(2))
    with pytest.raises(LayoutMismatchError):
        assemble_liouvillian(H, [OperatorMatrix(SpaceLayout((3,)), np.eye(3))])


def test_single_photon_decay_rate():
    kappa = 0.7
    layout = SpaceLayout((3,))
    a = annihilation(3)
    L = assemble_liouvillian(OperatorMatrix(layout, np.zeros((3, 3))), [a * math.sqrt(2 * kappa)])
    rho1 = DensityMatrix.basis_state(layout, (1,))
    # d<n>/dt = -2 kappa <n> on the one-photon state
    rate = expectation(DensityMatrix(layout, L.apply(rho1)), a.dag() @ a)
    assert rate.real == pytest.approx(-2 * kappa, rel=1e-14)
    t = 1.3
    n_t = expectation(evolve(rho1, L, t), a.dag() @ a).real
    assert n_t == pytest.approx(math.exp(-2 * kappa * t), rel=1e-8)


@given(st.integers(0, 2**32 - 1))
def test_generator_preserves_trace_and_hermiticity(seed):
    rng = np.random.default_rng(seed)
    p = SystemParams.nominal()
    L = cavity_liouvillian(p, DriveSpec(1e-9, rng.normal() * GHZ, rng.normal() * GHZ), n_fock=2)
    d = L.layout.total_dim
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    out = L.apply(m)
    scale = L.norm() * np.abs(m).max()
    np.testing.assert_allclose(L.apply(m.conj().T), out.conj().T, atol=1e-13 * scale)
    assert abs(np.trace(out)) < 1e-13 * scale


def test_undriven_steady_state_is_ground(nominal):
    rho = steady_state(cavity_liouvillian(nominal, DriveSpec(0.0)))
    ground = DensityMatrix.ground(rho.layout).data
    np.testing.assert_allclose(rho.data, ground, atol=1e-12)


@pytest.mark.parametrize("basis", ["traveling", "standing"])
def test_empty_cavity_coherent_state(nominal, basis):
    p = nominal.replace(g_tw=0.0)
    drive = DriveSpec(2e-10, -p.gamma_beta, 0.0)
    L = cavity_liouvillian(p, drive, n_fock=6, basis=basis)
    rho = steady_state(L)
    bare = bare_cavity_photon_number(p, drive)
    a_cw = embed(annihilation(6), CW, L.layout)
    a_ccw = embed(annihilation(6), CCW, L.layout)
    if basis == "standing":
        a_cw, a_ccw = (a_cw + a_ccw) * (1 / math.sqrt(2)), (a_cw - a_ccw) * (1 / math.sqrt(2))
    n = (expectation(rho, a_cw.dag() @ a_cw) + expectation(rho, a_ccw.dag() @ a_ccw)).real
    assert n == pytest.approx(bare.n_cav, rel=1e-4)  # truncated Poisson tail
    assert np.trace(rho.data @ rho.data).real == pytest.approx(1.0, abs=1e-6)


def test_steady_state_methods_agree(nominal):
    L = cavity_liouvillian(nominal, DriveSpec(3e-10, 0.4 * GHZ, -0.2 * GHZ), n_fock=3)
    sols = [steady_state(L, m).data for m in ("sectors", "direct", "iterative")]
    np.testing.assert_allclose(sols[0], sols[1], atol=1e-12)
    np.testing.assert_allclose(sols[0], sols[2], atol=1e-10)
    with pytest.raises(ValueError):
        steady_state(L, "power-iteration")


def test_steady_state_zero_generator_not_unique():
    L = Liouvillian(SpaceLayout((3,)), sp.csr_array((9, 9), dtype=complex))
    with pytest.raises(NonUniqueSteadyStateError):
        steady_state(L)


def test_evolve_zero_time_and_bad_inputs(nominal):
    L = cavity_liouvillian(nominal, DriveSpec(1e-10))
    g = DensityMatrix.ground(L.layout)
    assert evolve(g, L, 0.0) is g
    with pytest.raises(ValueError):
        evolve(g, L, -1.0)
    with pytest.raises(LayoutMismatchError):
        evolve(DensityMatrix.ground(SpaceLayout.cavity_qd(2)), L, 1.0)


def test_exciton_population_and_coherence_decay(nominal):
    p = nominal.replace(g_tw=0.0)
    dal = 0.3 * GHZ
    L = cavity_liouvillian(p, DriveSpec(0.0, 0.0, dal), n_fock=2)
    layout = L.layout
    sm = embed(lower_sigma(), EMITTER, layout)
    t = 0.4 * NS
    excited = DensityMatrix.basis_state(layout, (0, 0, 1))
    pop = expectation(evolve(excited, L, t), sm.dag() @ sm).real
    assert pop == pytest.approx(math.exp(-p.gamma_par * t), rel=1e-8)
    plus = np.zeros(layout.total_dim, complex)
    plus[[0, 1]] = 1 / math.sqrt(2)
    coh = abs(expectation(evolve(DensityMatrix(layout, np.outer(plus, plus.conj())), L, t), sm))
    assert coh == pytest.approx(0.5 * math.exp(-p.gamma_perp * t), rel=1e-8)


def test_exciton_line_has_full_width_two_gamma_perp(nominal):
    # |g><e| is an eigenvector of the uncoupled generator: eigenvalue -gamma_perp + i*dal
    p = nominal.replace(g_tw=0.0)
    dal = 0.8 * GHZ
    L = cavity_liouvillian(p, DriveSpec(0.0, 0.0, dal), n_fock=2)
    op = np.zeros((L.layout.total_dim,) * 2, complex)
    op[0, 1] = 1.0
    out = L.apply(op)
    lam = out[0, 1]
    np.testing.assert_allclose(out - lam * op, 0, atol=1e-6)
    assert -2 * lam.real == pytest.approx(2 * p.gamma_perp, rel=1e-12)
    assert lam.imag == pytest.approx(dal, rel=1e-12)


def test_evolution_relaxes_to_steady_state(nominal):
    L = cavity_liouvillian(nominal, DriveSpec(5e-10, -nominal.gamma_beta, 0.0), n_fock=3)
    rho_ss = steady_state(L)
    t = 40 / min(nominal.gamma_par, nominal.kappa_T)
    rho_t = evolve(DensityMatrix.ground(L.layout), L, t)
    assert np.abs(rho_t.data - rho_ss.data).max() < 1e-8


def test_expectation_values():
    layout = SpaceLayout.cavity_qd(4)
    rho = DensityMatrix.basis_state(layout, (2, 1, 1))
    a = embed(annihilation(4), CW, layout)
    b = embed(annihilation(4), CCW, layout)
    sm = embed(lower_sigma(), EMITTER, layout)
    assert expectation(rho, a.dag() @ a) == pytest.approx(2.0)
    assert expectation(rho, b.dag() @ b) == pytest.approx(1.0)
    assert expectation(rho, sm.dag() @ sm) == pytest.approx(1.0)
    assert expectation(rho, a) == 0
    with pytest.raises(LayoutMismatchError):
        expectation(rho, annihilation(4))


def test_density_matrix_validation():
    layout = SpaceLayout((2,))
    with pytest.raises(LayoutMismatchError):
        DensityMatrix(layout, np.eye(3))
    with pytest.raises(InvalidStateError):
        DensityMatrix(layout, np.eye(2)).validate()
    with pytest.raises(InvalidStateError):
        DensityMatrix(layout, [[0.5, 0.5], [0.0, 0.5]]).validate()
    with pytest.raises(InvalidStateError):
        DensityMatrix(layout, np.diag([1.5, -0.5])).validate()


def test_truncation_residual():
    layout = SpaceLayout.cavity_qd(4)
    np.testing.assert_allclose(truncation_residual(DensityMatrix.ground(layout)), [0, 0], atol=1e-15)
    # truncated coherent state in the cw mode: residual = N * p(N - 1)
    n_mean, N = 0.03, 4
    k = np.arange(N)
    amp = np.sqrt(np.exp(-n_mean) * n_mean**k / np.array([math.factorial(int(i)) for i in k]))
    psi = np.zeros(layout.total_dim, complex)
    for i in range(N):
        psi[np.ravel_multi_index((i, 0, 0), layout.mode_dims)] = amp[i]
    psi /= np.linalg.norm(psi)
    res = truncation_residual(DensityMatrix(layout, np.outer(psi, psi.conj())))
    assert res[0] == pytest.approx(N * abs(psi[np.ravel_multi_index((N - 1, 0, 0), layout.mode_dims)]) ** 2, rel=1e-12)
    assert res[1] == pytest.approx(0.0, abs=1e-15)


def test_no_external_coupling_means_no_drive(nominal):
    p = nominal.replace(kappa_e=0.0)
    rho = steady_state(cavity_liouvillian(p, DriveSpec(1e-8, 0.0, 0.0)))
    np.testing.assert_allclose(rho.data, DensityMatrix.ground(rho.layout).data, atol=1e-12)
