"""Reduced-rank Koopman estimation with a linear kernel, and its spectral analysis.

Feature vectors are real Pauli coefficient vectors of density matrices. The
estimator stores the forward state map ``T`` (``y ~ T x``). The Koopman
operator acting on observable coefficient vectors is ``T.T``: for an
observable ``f``, ``<f, T x> = <T.T f, x>``.

Eigen-triplet conventions
-------------------------
``right`` (psi) is an eigenvector of ``T.T``, i.e. a left eigenvector of ``T``;
the eigenfunction it defines is ``psi(x) = psi @ x``. ``left`` (xi) is the
complex conjugate of the matching right eigenvector of ``T``, so that
``xi.conj() @ psi == 1`` and ``T.T = sum_i lambda_i psi_i xi_i^H`` on the
learned range.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .lindblad import FormatError, _read_header
from .operators import commutator, frobenius_norm, from_pauli_coeffs

logger = logging.getLogger(__name__)

RANK_TOL = 1e-10
RESIDUAL_FLOOR = 1e-12


class DefectiveSpectrumError(ArithmeticError):
    """The learned operator is (numerically) not diagonalizable on its range."""


@dataclass(frozen=True)
class KoopmanEstimator:
    T: np.ndarray
    rank: int
    reg: float
    dt: float = 1.0

    @property
    def feature_dim(self) -> int:
        return self.T.shape[0]

    def numerical_rank(self, tol: float = RANK_TOL) -> int:
        s = np.linalg.svd(self.T, compute_uv=False)
        if s[0] == 0:
            return 0
        return int(np.sum(s > tol * s[0]))


def _as_pairs(pairs):
    if isinstance(pairs, tuple) and len(pairs) == 2 and np.ndim(pairs[0]) == 2:
        x, y = pairs
    else:
        pairs = list(pairs)
        x = np.array([p[0] for p in pairs], dtype=float)
        y = np.array([p[1] for p in pairs], dtype=float)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if x.shape != y.shape or x.shape[0] < 1:
        raise ValueError(f"inputs {x.shape} and outputs {y.shape} must be matching (n, dim) arrays")
    return x, y


def _fix_svd_signs(U, Vt):
    """Make the first non-negligible entry of each left singular vector positive."""
    for j in range(U.shape[1]):
        col = U[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12 * np.max(np.abs(col)))
        if nz.size and col[nz[0]] < 0:
            U[:, j] = -col
            Vt[j] = -Vt[j]
    return U, Vt


def rrr_objective(T, x, y, reg) -> float:
    """``(1/n) sum ||y_i - T x_i||^2 + reg ||T||_F^2``."""
    resid = y - x @ T.T
    return float(np.sum(resid**2) / x.shape[0] + reg * np.sum(T**2))


def fit_rrr(pairs, rank: int, reg: float, dt: float = 1.0) -> KoopmanEstimator:
    """Reduced-rank ridge regression ``y ~ T x`` with ``rank(T) <= rank``.

    Global minimizer of :func:`rrr_objective` over rank-constrained ``T``:
    whiten the inputs with ``W = C_X^{-1/2}``, ``C_X = X^T X / n + reg I``,
    truncate the SVD of ``G = C_YX W`` to ``rank`` terms and map back,
    ``T = [G]_rank W``.

    Parameters
    ----------
    pairs : (x, y) tuple of (n, dim) arrays, or an iterable of (x_i, y_i)
    rank : int
    reg : float
        Tikhonov strength, must be positive.
    dt : float
        Time between ``x_i`` and ``y_i``; kept for spectral analysis.
    """
    x, y = _as_pairs(pairs)
    n, dim = x.shape
    if not 1 <= rank <= dim:
        raise ValueError(f"rank {rank} outside 1..{dim}")
    if not reg > 0:
        raise ValueError("reg must be positive")

    cx = x.T @ x / n + reg * np.eye(dim)
    cyx = y.T @ x / n
    w, V = np.linalg.eigh(cx)
    whiten = (V / np.sqrt(w)) @ V.T
    G = cyx @ whiten
    U, s, Vt = np.linalg.svd(G)
    U, Vt = _fix_svd_signs(U, Vt)
    if rank < s.size and s[rank - 1] - s[rank] <= 1e-12 * s[0]:
        logger.warning("singular values tie at the rank cutoff (%.3e vs %.3e); keeping LAPACK order",
                       s[rank - 1], s[rank])
    T = (U[:, :rank] * s[:rank]) @ (Vt[:rank] @ whiten)
    return KoopmanEstimator(T=T, rank=rank, reg=float(reg), dt=float(dt))


def forecast_state(est: KoopmanEstimator, x0, t: int) -> np.ndarray:
    """``T^t x0`` by repeated application."""
    if t < 0:
        raise ValueError("t must be non-negative")
    x = np.asarray(x0, dtype=float).copy()
    for _ in range(t):
        x = est.T @ x
    return x


def forecast_states(est: KoopmanEstimator, x0, horizon: int) -> np.ndarray:
    """Stack of ``T^t x0`` for ``t = 0..horizon``."""
    out = np.empty((horizon + 1, len(x0)))
    out[0] = x0
    for t in range(1, horizon + 1):
        out[t] = est.T @ out[t - 1]
    return out


def _real_observable(f) -> np.ndarray:
    f = np.asarray(f)
    if np.iscomplexobj(f):
        if np.max(np.abs(f.imag), initial=0.0) > 1e-12:
            raise ValueError("observable coefficients must be real (hermitian observable)")
        f = f.real
    return f.astype(float)


def forecast_observable(est: KoopmanEstimator, f, x0, t: int) -> float:
    """``<f, T^t x0>``, the forecast expectation of the observable with coefficients ``f``."""
    return float(_real_observable(f) @ forecast_state(est, x0, t))


@dataclass(frozen=True)
class EigenTriplet:
    eigenvalue: complex
    right: np.ndarray  # psi: eigenfunction coefficients, T.T psi = lambda psi
    left: np.ndarray   # xi: conj of the right eigenvector of T, xi^H psi = 1

    def eigenfunction(self, x) -> complex:
        """``psi(x) = psi @ x``."""
        return complex(self.right @ np.asarray(x))


def eigen_triplets(est: KoopmanEstimator, cond_limit: float = 1e10) -> list[EigenTriplet]:
    """Eigen-triplets of ``T`` restricted to its range, sorted by ``|lambda|`` descending.

    The eigenproblem is solved on the ``r x r`` compression ``Q^T T Q`` where
    ``Q`` spans the range of ``T``, then lifted back to feature space.
    """
    T = est.T
    U, s, _ = np.linalg.svd(T)
    r = min(est.rank, int(np.sum(s > RANK_TOL * s[0]))) if s[0] > 0 else 0
    if r == 0:
        raise DefectiveSpectrumError("estimator is identically zero")
    Q = U[:, :r]
    B = Q.T @ T
    A = B @ Q
    lam, Vr = np.linalg.eig(A)

    cond = np.linalg.cond(Vr)
    if not np.isfinite(cond) or cond > cond_limit:
        raise DefectiveSpectrumError(
            f"eigenvector matrix condition number {cond:.3e} exceeds {cond_limit:.1e}; "
            "suspected Jordan block on the learned range"
        )
    # a split Jordan block passes the condition test (cond ~ 1/sqrt(eps)) but
    # cannot be reconstructed to working precision
    recon = np.linalg.norm((Vr * lam) @ np.linalg.inv(Vr) - A) / np.linalg.norm(A)
    if recon > RESIDUAL_FLOOR:
        raise DefectiveSpectrumError(
            f"eigendecomposition residual {recon:.3e} above floor {RESIDUAL_FLOOR:.0e}; "
            "suspected Jordan block on the learned range"
        )
    if np.min(np.abs(lam)) <= 1e-14 * s[0]:
        raise DefectiveSpectrumError("zero eigenvalue on the learned range; left eigenvectors undefined")

    Z = np.linalg.inv(Vr)  # rows: left eigenvectors of A, Z @ Vr = I
    R = Q @ Vr             # right eigenvectors of T
    Psi = (Z @ B).T / lam  # left eigenvectors of T, Psi.T @ R = I

    order = sorted(range(r), key=lambda i: (-round(abs(lam[i]), 12), -lam[i].imag))
    triplets = []
    for i in order:
        psi = Psi[:, i]
        k = int(np.argmax(np.abs(psi)))
        scale = np.conj(psi[k]) / (abs(psi[k]) * np.linalg.norm(psi))
        psi = psi * scale
        psi[k] = psi[k].real  # drop rounding residue
        right_T = R[:, i] / scale
        triplets.append(EigenTriplet(complex(lam[i]), psi, np.conj(right_T)))
    return triplets


@dataclass(frozen=True)
class ModeDecomposition:
    eigenvalues: np.ndarray
    amplitudes: np.ndarray      # gamma_i^f = xi_i^H f
    initial_values: np.ndarray  # psi_i(x0)

    def terms(self, t: int) -> np.ndarray:
        return self.eigenvalues**t * self.amplitudes * self.initial_values

    def reconstruct(self, t: int, imag_tol: float = 1e-8) -> float:
        total = self.terms(t).sum()
        if abs(total.imag) > imag_tol * max(1.0, abs(total.real)):
            raise ValueError(f"mode sum has imaginary residue {total.imag:.3e}")
        return float(total.real)

    def series(self, horizon: int) -> np.ndarray:
        return np.array([self.reconstruct(t) for t in range(horizon + 1)])


def mode_decomposition(triplets: list[EigenTriplet], f, x0) -> ModeDecomposition:
    """Koopman mode decomposition ``<f, T^t x0> = sum_i lambda_i^t gamma_i psi_i(x0)``.

    Exact for ``t >= 1``; at ``t = 0`` it gives ``f`` paired with the
    projection of ``x0`` onto the learned range.
    """
    f = np.asarray(f)
    x0 = np.asarray(x0)
    lam = np.array([tr.eigenvalue for tr in triplets])
    gamma = np.array([np.vdot(tr.left, f) for tr in triplets])
    init = np.array([tr.right @ x0 for tr in triplets])
    return ModeDecomposition(lam, gamma, init)


def range_projection(triplets: list[EigenTriplet], x) -> np.ndarray:
    """Oblique projection ``sum_i conj(xi_i) psi_i^T x`` onto the learned range."""
    x = np.asarray(x)
    out = sum(np.conj(tr.left) * (tr.right @ x) for tr in triplets)
    return np.real_if_close(out, tol=1e6)


@dataclass(frozen=True)
class SpectralSummary:
    eigenvalues: np.ndarray
    abs_lambda: np.ndarray
    arg_lambda: np.ndarray
    decay_rate: np.ndarray  # 1 / time
    frequency: np.ndarray   # cycles / time


def decay_rates_frequencies(triplets_or_eigenvalues, dt: float) -> SpectralSummary:
    """Polar form per unit time: ``rate = -ln|lambda| / dt``, ``freq = arg(lambda) / (2 pi dt)``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    lam = np.array([getattr(v, "eigenvalue", v) for v in triplets_or_eigenvalues], dtype=complex)
    mod = np.abs(lam)
    arg = np.angle(lam)
    arg = np.where(arg == -np.pi, np.pi, arg)
    with np.errstate(divide="ignore"):
        rate = -np.log(mod) / dt
    freq = arg / (2 * np.pi * dt)
    return SpectralSummary(lam, mod, arg, rate, freq)


def steady_mode(triplets: list[EigenTriplet]) -> EigenTriplet:
    """The triplet whose eigenvalue is closest to 1 (first one on ties)."""
    if not triplets:
        raise ValueError("no triplets")
    dist = [abs(tr.eigenvalue - 1.0) for tr in triplets]
    return triplets[int(np.argmin(dist))]


def eigenfunction_operator(triplet: EigenTriplet | np.ndarray) -> np.ndarray:
    """Operator ``Psi`` with ``tr(Psi rho) = psi(x(rho))`` for every ``rho``."""
    psi = getattr(triplet, "right", triplet)
    return from_pauli_coeffs(psi)


def symmetry_residual(Psi: np.ndarray, S: np.ndarray) -> float:
    """``||[Psi, S]||_F / (||Psi||_F ||S||_F)``; zero iff the two commute."""
    norm_psi = frobenius_norm(Psi)
    norm_s = frobenius_norm(S)
    if norm_psi == 0 or norm_s == 0:
        raise ValueError("symmetry residual undefined for a zero operator")
    return frobenius_norm(commutator(Psi, S)) / (norm_psi * norm_s)


# -- estimator file -----------------------------------------------------------

_EST_MAGIC = "# lindkoop estimator"


def format_estimator(est: KoopmanEstimator) -> str:
    lines = [
        _EST_MAGIC,
        f"# feature_dim: {est.feature_dim}",
        f"# rank: {est.rank}",
        f"# reg: {est.reg:.17e}",
        f"# dt: {est.dt:.17e}",
        "# rows: T, row-major, y = T x",
    ]
    lines += [" ".join(f"{v:.17e}" for v in row) for row in est.T]
    return "\n".join(lines) + "\n"


def write_estimator(est: KoopmanEstimator, path: str | Path) -> None:
    Path(path).write_text(format_estimator(est))


def read_estimator(path: str | Path) -> KoopmanEstimator:
    lines = Path(path).read_text().splitlines()
    header, start = _read_header(lines, _EST_MAGIC, path)
    try:
        dim = int(header["feature_dim"])
        rank = int(header["rank"])
        reg = float(header["reg"])
        dt = float(header["dt"])
        T = np.array([[float(v) for v in ln.split()] for ln in lines[start:] if ln.strip()])
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if T.shape != (dim, dim):
        raise FormatError(f"{path}: matrix shape {T.shape} does not match feature_dim {dim}")
    return KoopmanEstimator(T=T, rank=rank, reg=reg, dt=dt)
