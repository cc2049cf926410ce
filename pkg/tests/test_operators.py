"""Pauli algebra, embeddings and the Pauli-coefficient vectorization."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lindkoop.operators import (
    commutator,
    dagger,
    embed,
    frobenius_norm,
    from_pauli_coeffs,
    hs_inner,
    kron,
    pauli_labels,
    pauli_matrix,
    pauli_string,
    to_pauli_coeffs,
)

from .conftest import random_matrix

X, Y, Z, I2 = (pauli_matrix(a) for a in ("x", "y", "z", "identity"))


def test_pauli_matrices():
    np.testing.assert_array_equal(Z, np.diag([1, -1]))
    np.testing.assert_allclose(X @ Y, 1j * Z)
    assert np.trace(X @ X) == 2


def test_unknown_axis():
    with pytest.raises(ValueError):
        pauli_matrix("w")


class TestEmbed:
    def test_first_site(self):
        np.testing.assert_array_equal(embed(Z, 1, 2), np.diag([1, 1, -1, -1]))

    @pytest.mark.parametrize("site", [1, 2, 3])
    def test_identity(self, site):
        np.testing.assert_array_equal(embed(I2, site, 3), np.eye(8))

    def test_disjoint_sites_commute(self):
        c = commutator(embed(Z, 1, 3), embed(X, 2, 3))
        assert np.max(np.abs(c)) == 0

    def test_trace(self):
        op = np.array([[2.0, 1.0], [0.5, -0.5]])
        for site in (1, 2, 3, 4):
            assert np.trace(embed(op, site, 4)) == pytest.approx(np.trace(op) * 2**3)

    @pytest.mark.parametrize("site", [0, 4])
    def test_site_range(self, site):
        with pytest.raises(ValueError):
            embed(Z, site, 3)


class TestKron:
    def test_identity(self):
        np.testing.assert_array_equal(kron(I2, I2), np.eye(4))

    def test_trace_factorizes(self, rng):
        a, b = random_matrix(rng, 2), random_matrix(rng, 4)
        assert np.trace(kron(a, b)) == pytest.approx(np.trace(a) * np.trace(b))

    def test_xx_flips_both(self):
        e00 = np.array([1, 0, 0, 0])
        np.testing.assert_array_equal(kron(X, X) @ e00, [0, 0, 0, 1])


class TestInnerAndNorms:
    def test_examples(self, rng):
        assert hs_inner(I2, I2) == 2
        assert hs_inner(X, Y) == 0
        a = random_matrix(rng, 4)
        v = hs_inner(a, a)
        assert v.real >= 0 and v.imag == pytest.approx(0, abs=1e-12)

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            hs_inner(I2, np.eye(4))
        with pytest.raises(ValueError):
            commutator(I2, np.eye(4))

    def test_commutators(self, rng):
        np.testing.assert_allclose(commutator(X, Y), 2j * Z)
        a = random_matrix(rng, 4)
        np.testing.assert_array_equal(commutator(a, a), 0)
        assert frobenius_norm(np.eye(4)) == 2

    def test_dagger(self, rng):
        a = random_matrix(rng, 4)
        np.testing.assert_array_equal(dagger(a), a.conj().T)


class TestPauliCoefficients:
    def test_maximally_mixed_single_qubit(self):
        np.testing.assert_allclose(to_pauli_coeffs(np.eye(2) / 2), [1 / np.sqrt(2), 0, 0, 0], atol=1e-15)

    def test_labels_order(self):
        assert pauli_labels(1) == ["I", "X", "Y", "Z"]
        assert pauli_labels(2)[:5] == ["II", "IX", "IY", "IZ", "XI"]

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_strings_orthogonal(self, n):
        labels = pauli_labels(n)
        mats = [pauli_string(lab) for lab in labels]
        for (i, p), (j, q) in itertools.product(enumerate(mats), repeat=2):
            assert hs_inner(p, q) == pytest.approx(2**n * (i == j), abs=1e-12)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_strings_hermitian_unitary(self, n):
        for lab in pauli_labels(n):
            p = pauli_string(lab)
            np.testing.assert_array_equal(p, dagger(p))
            np.testing.assert_allclose(p @ p, np.eye(2**n))

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_matches_brute_force_traces(self, rng, n):
        a = random_matrix(rng, 2**n)
        expected = [np.trace(pauli_string(lab) @ a) / np.sqrt(2**n) for lab in pauli_labels(n)]
        np.testing.assert_allclose(to_pauli_coeffs(a), expected, atol=1e-13)

    def test_round_trip_random(self, rng):
        for k in range(100):
            n = 1 + k % 5
            a = random_matrix(rng, 2**n)
            np.testing.assert_allclose(from_pauli_coeffs(to_pauli_coeffs(a)), a, atol=1e-12, rtol=0)

    def test_round_trip_hermitian_4x4(self, rng):
        a = random_matrix(rng, 4, hermitian=True)
        assert np.max(np.abs(from_pauli_coeffs(to_pauli_coeffs(a)) - a)) <= 1e-12

    def test_trace_in_identity_coefficient(self, rng):
        for n in (1, 2, 3):
            a = random_matrix(rng, 2**n)
            assert np.trace(a) == pytest.approx(np.sqrt(2**n) * to_pauli_coeffs(a)[0])

    def test_parseval(self, rng):
        for n in (1, 2, 3, 4, 5):
            a, b = random_matrix(rng, 2**n), random_matrix(rng, 2**n)
            lhs = hs_inner(a, b)
            rhs = np.vdot(to_pauli_coeffs(a), to_pauli_coeffs(b))
            assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))

    def test_hermitian_iff_real(self, rng):
        for n in (1, 2, 3, 4, 5):
            h = random_matrix(rng, 2**n, hermitian=True)
            assert np.max(np.abs(to_pauli_coeffs(h).imag)) <= 1e-12
            a = random_matrix(rng, 2**n)
            assert np.max(np.abs(to_pauli_coeffs(a).imag)) > 1e-3

    def test_bad_dimensions(self):
        with pytest.raises(ValueError):
            to_pauli_coeffs(np.eye(3))
        with pytest.raises(ValueError):
            from_pauli_coeffs(np.ones(8))


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 4), seed=st.integers(0, 2**32 - 1))
def test_round_trip_property(n, seed):
    a = random_matrix(np.random.default_rng(seed), 2**n)
    c = to_pauli_coeffs(a)
    assert np.max(np.abs(from_pauli_coeffs(c) - a)) <= 1e-12 * max(1.0, np.max(np.abs(a)))
    assert np.linalg.norm(c) == pytest.approx(frobenius_norm(a), rel=1e-12)
