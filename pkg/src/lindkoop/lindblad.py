"""Dissipative Heisenberg chain: model, Lindblad integration, observables, data.

Units use hbar = 1. Site indices are 1-based, matching the physics notation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .operators import (
    commutator,
    dagger,
    embed,
    from_pauli_coeffs,
    is_hermitian,
    pauli_matrix,
    to_pauli_coeffs,
)
from .propagator import Propagator

logger = logging.getLogger(__name__)

BASIS_ORDER = "IXYZ-lex-site1-major"


class InvariantError(RuntimeError):
    """A simulated state violated trace, hermiticity or positivity bounds."""


class FormatError(ValueError):
    """A data file could not be parsed."""


@dataclass(frozen=True)
class SpinChainParams:
    N: int = 5
    J_par: float = 0.1 * math.pi
    J_perp: float = 0.2 * math.pi
    gamma: float = 0.01
    dt: float = 0.5
    steps: int = 200
    substeps: int = 50

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.steps < 2:
            raise ValueError("steps must be at least 2")
        if self.substeps < 1:
            raise ValueError("substeps must be at least 1")


@dataclass(frozen=True)
class LindbladModel:
    H: np.ndarray
    collapse_ops: tuple = ()

    def __post_init__(self):
        H = np.asarray(self.H, dtype=complex)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise ValueError("H must be square")
        if not is_hermitian(H):
            raise ValueError("H is not hermitian")
        ops = tuple(np.asarray(L, dtype=complex) for L in self.collapse_ops)
        for L in ops:
            if L.shape != H.shape:
                raise ValueError(f"collapse operator shape {L.shape} != {H.shape}")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "collapse_ops", ops)

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    @classmethod
    def from_params(cls, params: SpinChainParams) -> "LindbladModel":
        return cls(build_hamiltonian(params), tuple(build_dephasing_ops(params)))


@dataclass(frozen=True)
class Trajectory:
    """Snapshots ``rho(k dt)``, ``k = 1..steps``, as real Pauli coefficients.

    ``states[k - 1]`` holds the coefficient vector at ``times[k - 1] = k * dt``.
    """

    params: SpinChainParams
    times: np.ndarray
    states: np.ndarray
    initial_label: str = ""

    def density_matrix(self, k: int) -> np.ndarray:
        return from_pauli_coeffs(self.states[k])

    def __len__(self) -> int:
        return len(self.times)


def build_hamiltonian(params: SpinChainParams) -> np.ndarray:
    """Open-boundary XXZ Hamiltonian
    ``H = -1/2 sum_i [J_par (X_i X_{i+1} + Y_i Y_{i+1}) + J_perp Z_i Z_{i+1}]``."""
    n = params.N
    sx, sy, sz = (pauli_matrix(a) for a in "xyz")
    H = np.zeros((2**n, 2**n), dtype=complex)
    for i in range(1, n):
        xx = embed(sx, i, n) @ embed(sx, i + 1, n)
        yy = embed(sy, i, n) @ embed(sy, i + 1, n)
        zz = embed(sz, i, n) @ embed(sz, i + 1, n)
        H -= 0.5 * (params.J_par * (xx + yy) + params.J_perp * zz)
    return H


def build_dephasing_ops(params: SpinChainParams) -> list[np.ndarray]:
    """One pure-dephasing operator ``sqrt(gamma/2) Z_i`` per site."""
    scale = math.sqrt(params.gamma / 2.0)
    sz = pauli_matrix("z")
    return [scale * embed(sz, i, params.N) for i in range(1, params.N + 1)]


def lindblad_rhs(model: LindbladModel, rho: np.ndarray) -> np.ndarray:
    """Time derivative of ``rho`` under the Lindblad generator (hbar = 1)."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != model.H.shape:
        raise ValueError(f"state shape {rho.shape} does not match model {model.H.shape}")
    out = -1j * commutator(model.H, rho)
    for L in model.collapse_ops:
        Ld = dagger(L)
        LdL = Ld @ L
        out += L @ rho @ Ld - 0.5 * (rho @ LdL + LdL @ rho)
    return out


def initial_state(spec: str | list[str]) -> np.ndarray:
    """Product basis projector from per-site labels, e.g. ``"d,u,u,u,u"``.

    ``u`` is the +1 eigenstate of Z (basis index 0), ``d`` the -1 eigenstate.
    """
    labels = [s.strip().lower() for s in (spec.split(",") if isinstance(spec, str) else spec)]
    if not labels or any(s not in ("u", "d") for s in labels):
        raise ValueError(f"initial state labels must be 'u' or 'd', got {spec!r}")
    index = int("".join("1" if s == "d" else "0" for s in labels), 2)
    dim = 2 ** len(labels)
    rho = np.zeros((dim, dim), dtype=complex)
    rho[index, index] = 1.0
    return rho


def check_density_matrix(rho, *, trace_tol=1e-9, herm_tol=1e-10, pos_tol=1e-8) -> dict:
    """Return the invariant diagnostics of ``rho``; raise :class:`InvariantError` on violation."""
    trace_err = abs(np.trace(rho) - 1.0)
    herm_err = float(np.max(np.abs(rho - dagger(rho))))
    min_eig = float(np.linalg.eigvalsh(0.5 * (rho + dagger(rho)))[0])
    diag = {"trace_error": float(trace_err), "hermiticity_error": herm_err, "min_eigenvalue": min_eig}
    if trace_err > trace_tol or herm_err > herm_tol or min_eig < -pos_tol:
        raise InvariantError(
            "density-matrix invariant violated "
            f"(|tr-1|={trace_err:.3e}, herm={herm_err:.3e}, min eig={min_eig:.3e}); "
            "try more substeps"
        )
    return diag


def integrate(model: LindbladModel, rho0: np.ndarray, params: SpinChainParams,
              initial_label: str = "", backend: str | None = None) -> Trajectory:
    """Fixed-step RK4 with ``params.substeps`` steps per snapshot interval."""
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (model.dim, model.dim):
        raise ValueError(f"initial state shape {rho0.shape} does not match model dim {model.dim}")
    check_density_matrix(rho0)
    prop = Propagator(model.H, model.collapse_ops, backend=backend)
    h = params.dt / params.substeps
    rho = rho0
    states = np.empty((params.steps, model.dim**2))
    for k in range(params.steps):
        rho = prop.evolve(rho, h, params.substeps)
        try:
            check_density_matrix(rho)
        except InvariantError as exc:
            raise InvariantError(f"snapshot {k + 1} (t={(k + 1) * params.dt:g}): {exc}") from None
        c = to_pauli_coeffs(rho)
        states[k] = c.real
    times = params.dt * np.arange(1, params.steps + 1)
    return Trajectory(params, times, states, initial_label)


def simulate(params: SpinChainParams, initial_label: str, backend: str | None = None) -> Trajectory:
    """Build the chain model from ``params`` and integrate it from ``initial_label``."""
    rho0 = initial_state(initial_label)
    if rho0.shape[0] != 2**params.N:
        raise ValueError(f"initial state {initial_label!r} does not have {params.N} sites")
    return integrate(LindbladModel.from_params(params), rho0, params, initial_label, backend)


# -- observables --------------------------------------------------------------

def spin_polarization_op(site: int, n_spins: int) -> np.ndarray:
    return 0.5 * embed(pauli_matrix("z"), site, n_spins)


def total_sz_op(n_spins: int) -> np.ndarray:
    return sum(spin_polarization_op(i, n_spins) for i in range(1, n_spins + 1))


def spin_current_op(site: int, params: SpinChainParams) -> np.ndarray:
    """Spin current ``(i J_par / 4)[(s+_i s-_{i+1} - h.c.) - (s+_{i-1} s-_i - h.c.)]``.

    Ladder operators are ``X +- iY`` without a factor 1/2. End sites keep only
    the bond that exists.
    """
    n = params.N
    if not 1 <= site <= n:
        raise ValueError(f"site {site} outside 1..{n}")
    sx, sy = pauli_matrix("x"), pauli_matrix("y")
    plus = sx + 1j * sy
    minus = sx - 1j * sy

    def bond(i):
        return embed(plus, i, n) @ embed(minus, i + 1, n) - embed(minus, i, n) @ embed(plus, i + 1, n)

    out = np.zeros((2**n, 2**n), dtype=complex)
    if site < n:
        out += bond(site)
    if site > 1:
        out -= bond(site - 1)
    return 0.25j * params.J_par * out


def expectation(A: np.ndarray, rho: np.ndarray, imag_tol: float = 1e-10) -> float:
    """``Re tr(A rho)``; raises if the imaginary part exceeds ``imag_tol``."""
    value = np.einsum("ij,ji->", A, rho)
    if abs(value.imag) > imag_tol:
        raise ValueError(f"expectation has imaginary part {value.imag:.3e}; is A hermitian?")
    return float(value.real)


# -- dataset ------------------------------------------------------------------

@dataclass(frozen=True)
class DatasetSplit:
    x: np.ndarray  # (n_pairs, features), inputs
    y: np.ndarray  # (n_pairs, features), one step later
    train_times: np.ndarray
    test_states: np.ndarray
    test_times: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def n_pairs(self) -> int:
        return self.x.shape[0]


def dataset_split(traj: Trajectory, train_fraction: float = 0.5) -> DatasetSplit:
    """Consecutive-snapshot pairs from the leading ``train_fraction`` of ``traj``.

    200 snapshots at fraction 0.5 give 99 pairs from snapshots 1..100 and a
    test segment of snapshots 101..200.
    """
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie in (0, 1)")
    n_train = min(len(traj), math.ceil(train_fraction * len(traj) - 1e-9))
    if n_train < 2:
        raise ValueError(f"only {n_train} training snapshot(s); need at least 2")
    train = traj.states[:n_train]
    return DatasetSplit(
        x=train[:-1],
        y=train[1:],
        train_times=traj.times[:n_train],
        test_states=traj.states[n_train:],
        test_times=traj.times[n_train:],
    )


# -- trajectory file ----------------------------------------------------------

_TRAJ_MAGIC = "# lindkoop trajectory"


def _fmt(x: float) -> str:
    return f"{x:.17e}"


def format_trajectory(traj: Trajectory) -> str:
    p = traj.params
    header = {
        "N": p.N,
        "J_par": _fmt(p.J_par),
        "J_perp": _fmt(p.J_perp),
        "gamma": _fmt(p.gamma),
        "dt": _fmt(p.dt),
        "steps": p.steps,
        "substeps": p.substeps,
        "initial_label": traj.initial_label,
        "basis_order": BASIS_ORDER,
    }
    lines = [_TRAJ_MAGIC]
    lines += [f"# {k}: {v}" for k, v in header.items()]
    lines.append("# columns: time, then 4^N Pauli coefficients in basis order")
    for t, row in zip(traj.times, traj.states):
        lines.append(" ".join([_fmt(t)] + [_fmt(v) for v in row]))
    return "\n".join(lines) + "\n"


def write_trajectory(traj: Trajectory, path: str | Path) -> None:
    Path(path).write_text(format_trajectory(traj))


def _read_header(lines: list[str], magic: str, path) -> tuple[dict, int]:
    if not lines or lines[0].strip() != magic:
        raise FormatError(f"{path}: missing {magic!r} header line")
    header = {}
    i = 1
    while i < len(lines) and lines[i].startswith("#"):
        body = lines[i][1:].strip()
        if ":" in body:
            key, _, value = body.partition(":")
            header[key.strip()] = value.strip()
        i += 1
    return header, i


def read_trajectory(path: str | Path) -> Trajectory:
    lines = Path(path).read_text().splitlines()
    header, start = _read_header(lines, _TRAJ_MAGIC, path)
    try:
        if header.get("basis_order") != BASIS_ORDER:
            raise FormatError(f"{path}: unsupported basis_order {header.get('basis_order')!r}")
        params = SpinChainParams(
            N=int(header["N"]),
            J_par=float(header["J_par"]),
            J_perp=float(header["J_perp"]),
            gamma=float(header["gamma"]),
            dt=float(header["dt"]),
            steps=int(header["steps"]),
            substeps=int(header["substeps"]),
        )
        data = np.array([[float(v) for v in ln.split()] for ln in lines[start:] if ln.strip()])
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if data.shape != (params.steps, 1 + 4**params.N):
        raise FormatError(f"{path}: data block shape {data.shape} does not match header")
    return Trajectory(params, data[:, 0].copy(), data[:, 1:].copy(), header.get("initial_label", ""))
