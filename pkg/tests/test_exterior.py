import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fermion_wn.exterior import (
    AntisymTensor,
    BiKernel,
    PairingTable,
    antisymmetrize,
    contract_left,
    contract_right,
    dense_wedge_contract,
    inner_product,
    kernel_to_dense,
    merge_sign,
    permutation_sign,
    to_dense,
    wedge,
    wedge_contract,
    weighted_norm,
)
from strategies import antisym_tensors, complex_vectors, pairings

IDENTITY5 = PairingTable.identity(5)


def brute_sign(seq):
    """Sign by counting inversions (independent of the library routine)."""
    if len(set(seq)) < len(seq):
        return 0
    inv = sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])
    return -1 if inv % 2 else 1


@given(st.lists(st.integers(0, 6), max_size=6))
def test_permutation_sign_matches_inversion_count(seq):
    assert permutation_sign(seq) == brute_sign(seq)


def test_merge_sign_examples():
    assert merge_sign((1,), (0,)) == -1
    assert merge_sign((0, 2), (1,)) == -1
    assert merge_sign((0,), (0,)) == 0


# --- antisymmetrizer -------------------------------------------------------


def test_antisymmetrize_simple_product():
    t = np.zeros((3, 3))
    t[1, 2] = 1.0
    a = antisymmetrize(t)
    assert a.coeffs == {(1, 2): 1}
    dense = to_dense(a, 3)
    assert dense[1, 2] == pytest.approx(0.5) and dense[2, 1] == pytest.approx(-0.5)


def test_antisymmetrize_repeated_index_vanishes():
    t = np.zeros((3, 3))
    t[1, 1] = 1.0
    assert antisymmetrize(t).coeffs == {}
    assert antisymmetrize({(1, 1): 1.0}).coeffs == {}


@pytest.mark.parametrize("degree", [1, 2, 3, 4, 5])
def test_antisymmetrizer_idempotent(degree):
    rng = np.random.default_rng(degree)
    n = 5 if degree < 5 else 5
    shape = (n,) * degree
    t = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    once = to_dense(antisymmetrize(t), n)
    twice = to_dense(antisymmetrize(once), n)
    assert np.abs(once - twice).max() <= 1e-14


def test_antisymmetrize_degree3_against_explicit_permutation_sum():
    rng = np.random.default_rng(7)
    t = rng.normal(size=(4, 4, 4))
    explicit = np.zeros_like(t)
    for perm in itertools.permutations(range(3)):
        explicit += brute_sign(perm) * np.transpose(t, perm)
    explicit /= 6
    assert np.abs(to_dense(antisymmetrize(t), 4) - explicit).max() <= 1e-14


# --- wedge ------------------------------------------------------------------


def test_wedge_transposition_sign():
    e1, e2 = AntisymTensor.basis(1), AntisymTensor.basis(2)
    assert wedge(e2, e1).coeffs == {(1, 2): -1}


def test_wedge_repeated_mode_vanishes():
    assert wedge(AntisymTensor.basis(1, 2), AntisymTensor.basis(1, 3)).coeffs == {}


@given(antisym_tensors(max_degree=2), antisym_tensors(max_degree=2), antisym_tensors(max_degree=2))
def test_wedge_associative(a, b, c):
    left, right = wedge(wedge(a, b), c), wedge(a, wedge(b, c))
    scale = max([1.0] + [abs(v) for v in left.coeffs.values()])
    assert left.max_abs_diff(right) <= 1e-12 * scale


@given(antisym_tensors(), antisym_tensors())
def test_wedge_graded_commutative(a, b):
    sign = (-1) ** (a.degree * b.degree)
    assert wedge(a, b).max_abs_diff(wedge(b, a) * sign) <= 1e-12


@given(antisym_tensors(degree=2), antisym_tensors(degree=2))
def test_pairs_commute(a, b):
    assert wedge(a, b).max_abs_diff(wedge(b, a)) <= 1e-12


@given(antisym_tensors(n_modes=4, max_degree=2), antisym_tensors(n_modes=4, max_degree=2))
def test_wedge_matches_dense_antisymmetrized_product(a, b):
    dense = antisymmetrize(np.multiply.outer(to_dense(a, 4), to_dense(b, 4)))
    assert wedge(a, b).max_abs_diff(dense) <= 1e-12


@given(antisym_tensors(max_degree=3), antisym_tensors(max_degree=2))
def test_wedge_norm_bound(a, b):
    ones = np.ones(5)
    lhs = weighted_norm(wedge(a, b), 0, ones)
    assert lhs <= weighted_norm(a, 0, ones) * weighted_norm(b, 0, ones) * (1 + 1e-12) + 1e-15


def test_wedge_norm_bound_on_200_random_pairs():
    rng = np.random.default_rng(0)
    ones = np.ones(6)
    for _ in range(200):
        p, q = rng.integers(0, 4, size=2)
        a = AntisymTensor(int(p), {k: complex(*rng.normal(size=2)) for k in itertools.combinations(range(6), p)})
        b = AntisymTensor(int(q), {k: complex(*rng.normal(size=2)) for k in itertools.combinations(range(6), q)})
        lhs = weighted_norm(wedge(a, b), 0, ones)
        assert lhs <= weighted_norm(a, 0, ones) * weighted_norm(b, 0, ones) * (1 + 1e-12)


# --- inner product and norms -------------------------------------------------


def test_inner_product_basis_values():
    e12, e13 = AntisymTensor.basis(1, 2), AntisymTensor.basis(1, 3)
    assert inner_product(e12, e12) == pytest.approx(0.5)
    assert inner_product(e12, e13) == 0


def test_inner_product_matches_dense_tensor_inner_product():
    rng = np.random.default_rng(3)
    for degree in (1, 2, 3):
        a = AntisymTensor(degree, {k: complex(*rng.normal(size=2)) for k in itertools.combinations(range(4), degree)})
        b = AntisymTensor(degree, {k: complex(*rng.normal(size=2)) for k in itertools.combinations(range(4), degree)})
        dense = np.vdot(to_dense(a, 4), to_dense(b, 4))
        assert abs(inner_product(a, b) - dense) <= 1e-12 * max(1, abs(dense))


@pytest.mark.parametrize("degree", [1, 2, 3, 4])
def test_inner_product_of_decomposables_is_scaled_determinant(degree):
    rng = np.random.default_rng(degree)
    fs = [rng.normal(size=6) + 1j * rng.normal(size=6) for _ in range(degree)]
    gs = [rng.normal(size=6) + 1j * rng.normal(size=6) for _ in range(degree)]
    F = G = AntisymTensor.scalar(1.0)
    for f, g in zip(fs, gs):
        F, G = wedge(F, AntisymTensor.vector(f)), wedge(G, AntisymTensor.vector(g))
    det = sum(brute_sign(p) * np.prod([np.vdot(fs[i], gs[p[i]]) for i in range(degree)])
              for p in itertools.permutations(range(degree)))
    expected = det / math.factorial(degree)
    assert abs(inner_product(F, G) - expected) <= 1e-12 * max(1, abs(expected))


def test_inner_product_degree_mismatch():
    with pytest.raises(ValueError):
        inner_product(AntisymTensor.basis(1), AntisymTensor.basis(1, 2))


def test_weighted_norm_examples():
    e12 = AntisymTensor.basis(0, 1)
    assert weighted_norm(e12, 0, [1, 1]) ** 2 == pytest.approx(0.5)
    assert weighted_norm(e12, 1, [2, 3]) ** 2 == pytest.approx(18.0)


def test_weighted_norm_matches_dense_scaling():
    rng = np.random.default_rng(5)
    lam = np.array([1.5, 2.0, 3.0, 4.5])
    a = AntisymTensor(2, {k: complex(*rng.normal(size=2)) for k in itertools.combinations(range(4), 2)})
    dense = to_dense(a, 4) * np.multiply.outer(lam, lam) ** 0.7
    assert weighted_norm(a, 0.7, lam) == pytest.approx(np.linalg.norm(dense), rel=1e-12)


@given(antisym_tensors(max_degree=3), st.floats(0.1, 2.0))
def test_weighted_norm_cauchy_schwarz(a, p):
    lam = np.array([1.2, 2.0, 3.5, 1.1, 5.0])
    lhs = weighted_norm(a, -p, lam) * weighted_norm(a, p, lam)
    assert lhs >= weighted_norm(a, 0, lam) ** 2 * (1 - 1e-12)


# --- contractions -------------------------------------------------------------


def test_contract_right_simple():
    F = np.zeros((3, 3))
    F[1, 2] = 1.0
    g = np.zeros(3)
    g[2] = 1.0
    out = contract_right(F, g, 1, PairingTable.identity(3))
    assert np.allclose(out, np.eye(3)[1])


def test_contract_order_zero_is_outer_product():
    rng = np.random.default_rng(1)
    F, g = rng.normal(size=(3, 3)), rng.normal(size=3)
    assert np.allclose(contract_right(F, g, 0, PairingTable.identity(3)), np.multiply.outer(F, g))


def test_contract_too_large():
    with pytest.raises(ValueError):
        contract_right(np.zeros(3), np.zeros((3, 3)), 2, PairingTable.identity(3))


def test_sparse_and_dense_contractions_agree():
    rng = np.random.default_rng(2)
    pairing = PairingTable((1, 0, 2), (1j, 1j, -1))
    F = rng.normal(size=(3, 3, 3))
    g = rng.normal(size=(3, 3))
    dense = contract_right(F, g, 1, pairing)
    sparse = contract_right({idx: F[idx] for idx in np.ndindex(F.shape)},
                            {idx: g[idx] for idx in np.ndindex(g.shape)}, 1, pairing)
    rebuilt = np.zeros_like(dense, dtype=complex)
    for k, v in sparse.items():
        rebuilt[k] += v
    assert np.abs(rebuilt - dense).max() <= 1e-12


@pytest.mark.parametrize("l,n,m", [(1, 1, 1), (1, 0, 1), (0, 1, 2), (1, 1, 2), (2, 1, 1)])
def test_left_and_right_wedge_contractions_differ_by_sign(l, n, m):
    rng = np.random.default_rng(10 * l + n + m)
    pairing = PairingTable((1, 0, 2, 3, 4), (1j, 1j, 1, -1, 1))
    F = to_dense(AntisymTensor(l + m, {k: complex(*rng.normal(size=2)) for k in itertools.combinations(range(5), l + m)}), 5)
    g = to_dense(AntisymTensor(n + m, {k: complex(*rng.normal(size=2)) for k in itertools.combinations(range(5), n + m)}), 5)
    left = antisymmetrize(contract_left(F, g, m, pairing))
    right = antisymmetrize(contract_right(F, g, m, pairing))
    assert left.max_abs_diff(right * (-1) ** (m * (l + n))) <= 1e-12


def _random_kernel(rng, n, p, q):
    return BiKernel(p, q, {(s, t): complex(*rng.normal(size=2))
                           for s in itertools.combinations(range(n), p)
                           for t in itertools.combinations(range(n), q)})


@given(pairings(n_modes=5), st.integers(0, 2), st.integers(0, 2), st.integers(0, 2), st.integers(0, 2 ** 16))
def test_wedge_contract_matches_dense_oracle(pairing, p, m, extra, seed):
    rng = np.random.default_rng(seed)
    kernel = _random_kernel(rng, 5, p, m)
    g = AntisymTensor(m + extra, {k: complex(*rng.normal(size=2)) for k in itertools.combinations(range(5), m + extra)})
    fast = wedge_contract(kernel, g, m, pairing)
    slow = dense_wedge_contract(kernel_to_dense(kernel, 5), g, m, pairing)
    assert fast.max_abs_diff(slow) <= 1e-12


def test_wedge_contract_full_pair_scalar():
    e12 = AntisymTensor.basis(0, 1)
    kernel = BiKernel(0, 2, {((), (0, 1)): 1.0})
    fast = wedge_contract(kernel, e12, 2, PairingTable.identity(2))
    slow = dense_wedge_contract(kernel_to_dense(kernel, 2), e12, 2, PairingTable.identity(2))
    assert fast.degree == 0
    assert fast.max_abs_diff(slow) <= 1e-15
    # 2-slot contraction of the 1/2!-normalised tensors: -(1/2!)^2 * 2 with the (0,1) vs (1,0) slot order
    assert abs(fast.coeffs[()]) == pytest.approx(0.5)


def test_wedge_contract_with_zero():
    kernel = BiKernel(1, 1, {((0,), (1,)): 1.0})
    assert wedge_contract(kernel, AntisymTensor.zero(2), 1, PairingTable.identity(3)).coeffs == {}


def test_antisym_tensor_argument_reads_as_kernel():
    rng = np.random.default_rng(4)
    F = AntisymTensor(3, {k: complex(*rng.normal(size=2)) for k in itertools.combinations(range(4), 3)})
    g = AntisymTensor(2, {k: complex(*rng.normal(size=2)) for k in itertools.combinations(range(4), 2)})
    pairing = PairingTable.identity(4)
    fast = wedge_contract(F, g, 2, pairing)
    slow = dense_wedge_contract(to_dense(F, 4), g, 2, pairing)
    assert fast.max_abs_diff(slow) <= 1e-12
    even = antisymmetrize(contract_left(to_dense(F, 4), to_dense(g, 4), 2, pairing))
    assert fast.max_abs_diff(even) <= 1e-12


def test_pairing_validation():
    with pytest.raises(ValueError):
        PairingTable((1, 1), (1, 1))
    with pytest.raises(ValueError):
        PairingTable((1, 0), (1, -1))
    with pytest.raises(ValueError):
        PairingTable((0,), (2.0,))


def test_pairing_dual_coordinates():
    pairing = PairingTable((1, 0, 2), (1j, 1j, -1))
    rng = np.random.default_rng(0)
    f, g = rng.normal(size=3) + 1j * rng.normal(size=3), rng.normal(size=3)
    assert pairing.dual_coordinates(f) @ g == pytest.approx(pairing.pair(f, g))
    assert pairing.pair(f, g) == pytest.approx(pairing.pair(g, f))
