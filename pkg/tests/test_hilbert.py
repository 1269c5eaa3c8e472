import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wgmcqed.errors import InvalidDimensionError, LayoutMismatchError
from wgmcqed.hilbert import (
    CCW,
    CW,
    EMITTER,
    OperatorMatrix,
    SpaceLayout,
    annihilation,
    commutator,
    embed,
    lower_sigma,
)


def test_annihilation_small_dims():
    assert annihilation(2).entries == {(0, 1): 1.0}
    a3 = annihilation(3).entries
    assert a3.keys() == {(0, 1), (1, 2)}
    assert a3[(0, 1)] == 1.0
    assert a3[(1, 2)] == pytest.approx(math.sqrt(2), abs=1e-15)


@pytest.mark.parametrize("dim", [0, 1, -3, 2.5])
def test_annihilation_rejects_bad_dim(dim):
    with pytest.raises(InvalidDimensionError):
        annihilation(dim)


def test_truncated_commutator_corner():
    a = annihilation(6)
    comm = commutator(a, a.dag()).to_dense()
    np.testing.assert_allclose(np.diag(comm), [1, 1, 1, 1, 1, -5], atol=1e-14)
    np.testing.assert_allclose(comm - np.diag(np.diag(comm)), 0, atol=1e-14)


def test_sigma_algebra():
    sm = lower_sigma()
    sp = sm.dag()
    assert sm.entries == {(0, 1): 1.0}
    assert (sm @ sm).nnz == 0
    np.testing.assert_allclose((sp @ sm + sm @ sp).to_dense(), np.eye(2))
    assert commutator(sp @ sm, sm) == -sm


def test_embed_identity_and_trace():
    layout = SpaceLayout.cavity_qd(4)
    for slot, d in enumerate(layout.mode_dims):
        eye = OperatorMatrix.identity(SpaceLayout((d,)))
        assert embed(eye, slot, layout) == OperatorMatrix.identity(layout)
    proj = embed(lower_sigma().dag() @ lower_sigma(), EMITTER, layout)
    assert proj.trace() == pytest.approx(16)


def test_embed_disjoint_slots_commute_and_sparsity():
    layout = SpaceLayout.cavity_qd(5)
    a = annihilation(5)
    a0, a1 = embed(a, CW, layout), embed(a, CCW, layout)
    assert commutator(a0, a1).nnz == 0
    assert commutator(a0, a1.dag()).nnz == 0
    assert a0.nnz == a.nnz * 5 * 2


def test_embed_errors():
    layout = SpaceLayout.cavity_qd(3)
    with pytest.raises(InvalidDimensionError):
        embed(annihilation(3), 3, layout)
    with pytest.raises(LayoutMismatchError):
        embed(annihilation(4), CW, layout)
    with pytest.raises(LayoutMismatchError):
        embed(lower_sigma(), CW, layout)


def test_layout_validation_and_labels():
    with pytest.raises(InvalidDimensionError):
        SpaceLayout.cavity_qd(1)
    with pytest.raises(InvalidDimensionError):
        SpaceLayout((3, 0))
    lay = SpaceLayout.cavity_qd(3)
    assert lay.total_dim == 18
    labels = lay.basis_labels()
    assert labels.shape == (18, 3)
    assert tuple(labels[np.ravel_multi_index((2, 1, 1), lay.mode_dims)]) == (2, 1, 1)
    assert lay.excitation_numbers().max() == 5


def test_entries_skip_zeros_and_are_read_only():
    lay = SpaceLayout((3,))
    op = OperatorMatrix.from_entries(lay, {(0, 1): 2.0, (2, 2): 0.0})
    assert op.entries == {(0, 1): 2.0}
    with pytest.raises(ValueError):
        op.csr.data[0] = 5.0
    with pytest.raises(InvalidDimensionError):
        OperatorMatrix.from_entries(lay, {(3, 0): 1.0})


def test_layout_mismatch_in_arithmetic():
    a = OperatorMatrix.identity(SpaceLayout((2,)))
    b = OperatorMatrix.identity(SpaceLayout((3,)))
    with pytest.raises(LayoutMismatchError):
        a + b
    with pytest.raises(LayoutMismatchError):
        a @ b


# --- property tests against a dense reference ---------------------------------

dims = st.sampled_from([(2,), (4,), (2, 2), (2, 3), (2, 2, 2), (3, 3, 2), (4, 4, 2)])


@st.composite
def op_pair(draw):
    mode_dims = draw(dims)
    layout = SpaceLayout(mode_dims)
    n = layout.total_dim
    seed = draw(st.integers(0, 2**31 - 1))
    rng = np.random.default_rng(seed)

    def rand():
        mask = rng.random((n, n)) < 0.3
        return np.where(mask, rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)), 0)

    return layout, rand(), rand(), complex(rng.normal(), rng.normal())


@given(op_pair())
def test_sparse_matches_dense(data):
    layout, A, B, z = data
    a, b = OperatorMatrix(layout, A), OperatorMatrix(layout, B)
    np.testing.assert_allclose((a + b).to_dense(), A + B, atol=1e-14)
    np.testing.assert_allclose((a - b).to_dense(), A - B, atol=1e-14)
    np.testing.assert_allclose((a * z).to_dense(), A * z, atol=1e-14)
    np.testing.assert_allclose((a @ b).to_dense(), A @ B, atol=1e-13)
    np.testing.assert_allclose(commutator(a, b).to_dense(), A @ B - B @ A, atol=1e-13)
    assert a.dag().dag() == a
    np.testing.assert_allclose((a @ b).dag().to_dense(), (b.dag() @ a.dag()).to_dense(), atol=1e-13)
    assert all(v != 0 for v in (a @ b).entries.values())


@given(st.integers(2, 5), st.integers(0, 2**31 - 1), st.sampled_from([CW, CCW, EMITTER]))
def test_embed_distributes_over_products(n, seed, slot):
    layout = SpaceLayout.cavity_qd(n)
    d = layout.mode_dims[slot]
    rng = np.random.default_rng(seed)
    A = OperatorMatrix(SpaceLayout((d,)), rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    B = OperatorMatrix(SpaceLayout((d,)), rng.normal(size=(d, d)))
    lhs = embed(A @ B, slot, layout).to_dense()
    rhs = (embed(A, slot, layout) @ embed(B, slot, layout)).to_dense()
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)
