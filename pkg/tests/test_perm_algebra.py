import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twodesign import perm_algebra as pa


def test_weingarten_pair_values():
    assert pa.weingarten_pair(2, 2) == (pytest.approx(1 / 3), pytest.approx(-1 / 6))
    assert pa.weingarten_pair(2, 4) == (pytest.approx(1 / 15), pytest.approx(-1 / 60))
    assert pa.weingarten_pair(3, 3) == (pytest.approx(1 / 8), pytest.approx(-1 / 24))


def test_weingarten_rejects_small_dimension():
    with pytest.raises(pa.InvalidDimensionError):
        pa.weingarten_pair(2, 1)
    with pytest.raises(pa.InvalidDimensionError):
        pa.weingarten_pair(1, 4)


@pytest.mark.parametrize("q", [2, 3, 4])
def test_cobasis_duality(q):
    # pairing cobasis rows with basis columns gives the identity
    gram = pa.gram_matrix(q)
    inv = pa.cobasis_matrix(q)
    assert np.abs(inv @ gram - np.eye(2)).max() < 1e-14


def test_gate_transfer_columns():
    gt = pa.gate_transfer(2)
    assert np.allclose(gt.m[:, 0], [1, 0, 0, 0])
    assert np.allclose(gt.m[:, 3], [0, 0, 0, 1])
    assert np.allclose(gt.m[:, 1], [0.4, 0, 0, 0.4])
    assert np.allclose(gt.m[:, 2], [0.4, 0, 0, 0.4])


@pytest.mark.parametrize("q", [2, 3, 5])
def test_gate_transfer_idempotent(q):
    m = pa.gate_transfer(q).m
    assert np.abs(m @ m - m).max() < 1e-12
    assert np.allclose(m[:, 3], [0, 0, 0, 1])


def test_boundary_pairs():
    assert pa.boundary_pair(0, 2) == (pytest.approx(2 / 3), pytest.approx(2 / 3))
    assert pa.boundary_pair(1, 2) == (pytest.approx(2.0), pytest.approx(-2.0))


def test_boundary_state_product():
    st2 = pa.boundary_state((0, 1), 2)
    # over {II, IS, SI, SS} = indices (0, 2, 1, 3): (4/3, -4/3, 4/3, -4/3)
    assert np.allclose(st2.coeffs[[0, 2, 1, 3]],
                       [4 / 3, -4 / 3, 4 / 3, -4 / 3])


def test_boundary_weights_patterns():
    assert np.allclose(pa.boundary_weights((0, 0)), [1, 1, 1, 1])
    w11 = pa.boundary_weights((1, 1))
    assert np.allclose(w11[[0, 2, 1, 3]], [1, -1, -1, 1])
    w10 = pa.boundary_weights((1, 0))
    assert np.allclose(w10[[0, 2, 1, 3]], [1, 1, -1, -1])


def test_boundary_norm_identity():
    # <Psi(a)|Psi(a)> = prod (2 - 2 s_i/q) / (1 - 1/q^2)
    for a, q in [((1, 1), 2), ((0, 1, 0), 2), ((1, 0, 1, 1), 3)]:
        got = float(pa.boundary_weights(a) @ pa.boundary_state(a, q).coeffs)
        want = 1.0
        for bit in a:
            s = -1.0 if bit else 1.0
            want *= (2 - 2 * s / q) / (1 - 1 / q**2)
        assert got == pytest.approx(want, rel=1e-13)
    assert float(pa.boundary_weights((1, 1))
                 @ pa.boundary_state((1, 1), 2).coeffs) == pytest.approx(16.0)


def test_haar_moment_diagonal():
    assert pa.haar_moment_diagonal(2, 2, "even") == pytest.approx(1.6)
    assert pa.haar_moment_diagonal(3, 2, "odd") == pytest.approx(16 / 7)
    assert pa.haar_moment_diagonal(400, 2, 0) == pytest.approx(2.0)
    assert pa.haar_moment_diagonal(400, 2, 1) == pytest.approx(2.0)


def test_apply_two_site_regression_fixture():
    # boundary (0,0) hit by one gate on (0,1): computed once by hand from
    # the explicit 4x4 transfer and frozen
    state = pa.boundary_state((0, 0), 2)
    pa.apply_two_site(state, 0, 1)
    assert np.allclose(state.coeffs, [0.8, 0.0, 0.0, 0.8], atol=1e-15)


def test_apply_two_site_fixed_point():
    state = pa.CommutantState(3, 2, np.zeros(8))
    state.coeffs[0] = 1.25
    pa.apply_two_site(state, 0, 2)
    got = np.zeros(8)
    got[0] = 1.25
    assert np.array_equal(state.coeffs, got)


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=30, deadline=None)
def test_apply_two_site_idempotent(seed):
    rng = np.random.default_rng(seed)
    state = pa.CommutantState(4, 2, rng.standard_normal(16))
    once = pa.apply_two_site(state.copy(), 1, 3)
    twice = pa.apply_two_site(once.copy(), 1, 3)
    assert np.abs(twice.coeffs - once.coeffs).max() < 1e-12


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=30, deadline=None)
def test_apply_two_site_disjoint_commutes(seed):
    # local float updates interleave additions differently per order, so
    # agreement is to round-off, not bitwise
    rng = np.random.default_rng(seed)
    state = pa.CommutantState(4, 2, rng.standard_normal(16))
    ab = pa.apply_two_site(pa.apply_two_site(state.copy(), 0, 1), 2, 3)
    ba = pa.apply_two_site(pa.apply_two_site(state.copy(), 2, 3), 0, 1)
    scale = np.abs(state.coeffs).max()
    assert np.abs(ab.coeffs - ba.coeffs).max() <= 1e-14 * scale


def test_apply_two_site_index_errors():
    state = pa.boundary_state((0, 0), 2)
    with pytest.raises(IndexError):
        pa.apply_two_site(state, 0, 0)
    with pytest.raises(IndexError):
        pa.apply_two_site(state, 0, 5)


def test_global_haar_project_reaches_haar_values():
    state = pa.boundary_state((0, 0, 0), 2)
    pa.global_haar_project(state)
    qf = float(pa.boundary_weights((0, 0, 0)) @ state.coeffs)
    assert qf == pytest.approx(pa.haar_moment_diagonal(3, 2, 0), rel=1e-12)


def test_single_site_degenerate_case():
    # no two-site gates exist at n=1 but boundary and Haar values do
    state = pa.boundary_state((1,), 2)
    qf = float(pa.boundary_weights((1,)) @ state.coeffs)
    assert qf == pytest.approx(pa.haar_moment_diagonal(1, 2, 1), rel=1e-12)
    state0 = pa.boundary_state((0,), 2)
    qf0 = float(pa.boundary_weights((0,)) @ state0.coeffs)
    assert qf0 == pytest.approx(pa.haar_moment_diagonal(1, 2, 0), rel=1e-12)
