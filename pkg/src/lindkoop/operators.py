"""Dense operator algebra on N-spin Hilbert spaces.

Operators are plain ``numpy`` complex arrays of shape ``(2**N, 2**N)``.
Vectorization uses the Pauli-string basis normalized by ``1/sqrt(2**N)`` so
that it is orthonormal under the Hilbert-Schmidt inner product ``tr(A^H B)``.
Strings are ordered lexicographically over ``(I, X, Y, Z)`` with site 1 as the
most significant digit.
"""

from __future__ import annotations

import itertools
import numpy as np

PAULI_LABELS = "IXYZ"

_PAULI = {
    "identity": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_AXIS_ALIASES = {"i": "identity", "I": "identity", "X": "x", "Y": "y", "Z": "z"}

# _TO_PAULI[a, i, j] = P_a[j, i], so that sum_ij _TO_PAULI[a, i, j] A[i, j] = tr(P_a A)
_STACK = np.stack([_PAULI[k] for k in ("identity", "x", "y", "z")])
_TO_PAULI = _STACK.transpose(0, 2, 1).copy()


def pauli_matrix(axis: str) -> np.ndarray:
    """Return the 2x2 Pauli matrix for ``axis`` in ``{"x", "y", "z", "identity"}``."""
    key = _AXIS_ALIASES.get(axis, axis)
    try:
        return _PAULI[key].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}") from None


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(a, b)


def embed(op: np.ndarray, site: int, n_spins: int) -> np.ndarray:
    """Place the single-site operator ``op`` at ``site`` (1-based) of an N-spin chain."""
    if not 1 <= site <= n_spins:
        raise ValueError(f"site {site} outside 1..{n_spins}")
    op = np.asarray(op, dtype=complex)
    if op.shape != (2, 2):
        raise ValueError(f"expected a 2x2 operator, got shape {op.shape}")
    left = np.eye(2 ** (site - 1), dtype=complex)
    right = np.eye(2 ** (n_spins - site), dtype=complex)
    return np.kron(np.kron(left, op), right)


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.asarray(a)).T


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a, b = np.asarray(a), np.asarray(b)
    _check_same_shape(a, b)
    return a @ b - b @ a


def hs_inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product ``tr(A^H B)``."""
    a, b = np.asarray(a), np.asarray(b)
    _check_same_shape(a, b)
    return complex(np.vdot(a, b))


def frobenius_norm(a: np.ndarray) -> float:
    return float(np.sqrt(hs_inner(a, a).real))


def is_hermitian(a: np.ndarray, atol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(a - dagger(a)), initial=0.0) <= atol)


def num_spins(dim: int) -> int:
    """Return N for ``dim == 2**N``; raise otherwise."""
    n = int(dim).bit_length() - 1
    if dim < 1 or 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def pauli_labels(n_spins: int) -> list[str]:
    """Pauli-string labels in basis order, e.g. ``["II", "IX", ..., "ZZ"]``."""
    return ["".join(p) for p in itertools.product(PAULI_LABELS, repeat=n_spins)]


def pauli_string(labels: str) -> np.ndarray:
    """Matrix of a Pauli string such as ``"XIZ"`` (site 1 first)."""
    out = np.ones((1, 1), dtype=complex)
    for ch in labels:
        idx = PAULI_LABELS.find(ch.upper())
        if idx < 0:
            raise ValueError(f"invalid Pauli label {ch!r} in {labels!r}")
        out = np.kron(out, _STACK[idx])
    return out


def to_pauli_coeffs(a: np.ndarray) -> np.ndarray:
    """Coefficients ``c_P = tr(P A) / sqrt(2**N)`` in basis order.

    Contracted one site at a time, so the ``4**N`` basis matrices are never
    formed.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    n = num_spins(a.shape[0])
    order = [k for pair in zip(range(n), range(n, 2 * n)) for k in pair]
    t = a.reshape((2,) * (2 * n)).transpose(order)  # (i1, j1, i2, j2, ...)
    for _ in range(n):
        # leading (i, j) pair -> trailing Pauli index
        t = np.tensordot(t, _TO_PAULI, axes=([0, 1], [1, 2]))
    return t.reshape(-1) / np.sqrt(2**n)


def from_pauli_coeffs(coeffs: np.ndarray) -> np.ndarray:
    """Inverse of :func:`to_pauli_coeffs`: ``A = sum_P c_P P / sqrt(2**N)``."""
    c = np.asarray(coeffs, dtype=complex).reshape(-1)
    n = num_spins(int(round(np.sqrt(c.size)))) if c.size else -1
    if n < 0 or 4**n != c.size:
        raise ValueError(f"coefficient length {c.size} is not a power of four")
    t = c.reshape((4,) * n)
    for site in range(n):
        # replace Pauli index at position `site` by an (i, j) pair at the end
        t = np.tensordot(t, _STACK, axes=([0], [0]))
    # now axes are (i1, j1, i2, j2, ...)
    t = t.reshape((2, 2) * n)
    order = list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2))
    d = 2**n
    return t.transpose(order).reshape(d, d) / np.sqrt(d)
