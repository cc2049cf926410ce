"""Simulate -> fit -> analyze stages, as pure functions over in-memory artifacts.

Rendering to text is kept separate from writing so that the report stage can
re-run the pipeline and compare bytes.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass

import numpy as np

from .config import ConfigError, ObservableSpec, RunConfig
from .koopman import (
    KoopmanEstimator,
    decay_rates_frequencies,
    eigen_triplets,
    eigenfunction_operator,
    fit_rrr,
    forecast_states,
    rrr_objective,
    steady_mode,
    symmetry_residual,
)
from .lindblad import (
    DatasetSplit,
    SpinChainParams,
    Trajectory,
    build_hamiltonian,
    dataset_split,
    expectation,
    initial_state,
    simulate,
    spin_current_op,
    spin_polarization_op,
    total_sz_op,
)
from .operators import dagger, from_pauli_coeffs, to_pauli_coeffs

TRAJECTORY_FILE = "trajectory.txt"
ESTIMATOR_FILE = "estimator.txt"
FORECAST_FILE = "forecast.csv"
MODES_FILE = "modes.csv"
SYMMETRY_FILE = "symmetry.json"
REPORT_FILE = "report.json"


def fmt(v: float) -> str:
    return f"{v:.15g}"


def observable_matrix(spec: ObservableSpec, params: SpinChainParams) -> np.ndarray:
    if spec.kind == "polarization":
        return spin_polarization_op(spec.site, params.N)
    if spec.kind == "current":
        return spin_current_op(spec.site, params)
    if spec.kind == "total_sz":
        return total_sz_op(params.N)
    raise ConfigError(f"unknown observable kind {spec.kind!r}")


def observable_coeffs(spec: ObservableSpec, params: SpinChainParams) -> np.ndarray:
    return to_pauli_coeffs(observable_matrix(spec, params)).real


# -- simulate -----------------------------------------------------------------

def run_simulation(cfg: RunConfig, backend: str | None = None) -> Trajectory:
    return simulate(cfg.chain_params(), cfg.initial_label, backend=backend)


def conservation_diagnostics(traj: Trajectory) -> dict:
    """Worst-case invariant errors over all snapshots."""
    p = traj.params
    rho0 = initial_state(traj.initial_label) if traj.initial_label else traj.density_matrix(0)
    sz = total_sz_op(p.N)
    H = build_hamiltonian(p)
    sz0, e0, pur0 = expectation(sz, rho0), expectation(H, rho0), float(np.trace(rho0 @ rho0).real)
    out = {"max_trace_error": 0.0, "max_hermiticity_error": 0.0, "min_eigenvalue": np.inf,
           "max_sz_total_drift": 0.0, "max_energy_drift": 0.0, "max_purity_drift": 0.0}
    for k in range(len(traj)):
        rho = from_pauli_coeffs(traj.states[k])
        out["max_trace_error"] = max(out["max_trace_error"], abs(np.trace(rho) - 1.0))
        out["max_hermiticity_error"] = max(out["max_hermiticity_error"],
                                           float(np.max(np.abs(rho - dagger(rho)))))
        out["min_eigenvalue"] = min(out["min_eigenvalue"], float(np.linalg.eigvalsh(rho)[0]))
        out["max_sz_total_drift"] = max(out["max_sz_total_drift"], abs(expectation(sz, rho) - sz0))
        out["max_energy_drift"] = max(out["max_energy_drift"], abs(expectation(H, rho) - e0))
        out["max_purity_drift"] = max(out["max_purity_drift"], abs(float(np.trace(rho @ rho).real) - pur0))
    out["sz_total_initial"] = sz0
    return {k: float(v) for k, v in out.items()}


# -- fit ----------------------------------------------------------------------

@dataclass(frozen=True)
class FitResult:
    estimator: KoopmanEstimator
    split: DatasetSplit
    training_residual: float  # (1/n) sum ||y - T x||^2
    objective: float
    numerical_rank: int


def run_fit(traj: Trajectory, cfg: RunConfig) -> FitResult:
    dim = traj.states.shape[1]
    if cfg.rank > dim:
        raise ConfigError(f"rank {cfg.rank} exceeds feature dimension {dim}")
    split = dataset_split(traj, cfg.train_fraction)
    est = fit_rrr((split.x, split.y), cfg.rank, cfg.reg, dt=traj.params.dt)
    resid = split.y - split.x @ est.T.T
    return FitResult(
        estimator=est,
        split=split,
        training_residual=float(np.sum(resid**2) / split.n_pairs),
        objective=rrr_objective(est.T, split.x, split.y, est.reg),
        numerical_rank=est.numerical_rank(),
    )


# -- forecast -----------------------------------------------------------------

@dataclass(frozen=True)
class ForecastSeries:
    observable_id: str
    times: np.ndarray
    truth: np.ndarray
    forecast: np.ndarray
    n_train: int  # snapshots 1..n_train are training data


def forecast_series(est: KoopmanEstimator, traj: Trajectory, cfg: RunConfig) -> list[ForecastSeries]:
    """Truth and forecast on ``t = 0, dt, ..., steps*dt`` for each configured observable.

    Training snapshots get one-step predictions from the previous snapshot;
    test snapshots are iterated from the last training snapshot.
    """
    p = traj.params
    n_train = len(dataset_split(traj, cfg.train_fraction).train_times)
    x_init = to_pauli_coeffs(initial_state(traj.initial_label)).real
    states = np.vstack([x_init, traj.states])  # index k <-> t = k dt
    one_step = states[:n_train] @ est.T.T      # predictions for k = 1..n_train
    iterated = forecast_states(est, states[n_train], len(traj) - n_train)
    predicted = np.vstack([states[:1], one_step, iterated[1:]])
    times = np.concatenate([[0.0], traj.times])
    out = []
    for spec in cfg.observables:
        f = observable_coeffs(spec, p)
        out.append(ForecastSeries(spec.id, times, states @ f, predicted @ f, n_train))
    return out


def render_forecast_csv(series: list[ForecastSeries]) -> str:
    buf = io.StringIO()
    buf.write("time,observable_id,truth,forecast\n")
    for k in range(len(series[0].times)):
        for s in series:
            buf.write(f"{fmt(s.times[k])},{s.observable_id},{fmt(s.truth[k])},{fmt(s.forecast[k])}\n")
    return buf.getvalue()


def parse_forecast_csv(text: str) -> list[tuple[float, str, float, float]]:
    lines = text.strip().splitlines()
    if lines[0] != "time,observable_id,truth,forecast":
        raise ValueError("unexpected forecast CSV header")
    rows = []
    for ln in lines[1:]:
        t, oid, truth, fc = ln.split(",")
        rows.append((float(t), oid, float(truth), float(fc)))
    return rows


# -- modes --------------------------------------------------------------------

MODES_COLUMNS = ("index", "re_lambda", "im_lambda", "abs_lambda", "decay_rate", "frequency")


def render_modes_csv(est: KoopmanEstimator) -> str:
    summary = decay_rates_frequencies(eigen_triplets(est), est.dt)
    buf = io.StringIO()
    buf.write(",".join(MODES_COLUMNS) + "\n")
    for i, lam in enumerate(summary.eigenvalues):
        vals = (lam.real, lam.imag, summary.abs_lambda[i], summary.decay_rate[i], summary.frequency[i])
        buf.write(",".join([str(i + 1)] + [fmt(v) for v in vals]) + "\n")
    return buf.getvalue()


def parse_modes_csv(text: str) -> list[dict]:
    lines = text.strip().splitlines()
    if tuple(lines[0].split(",")) != MODES_COLUMNS:
        raise ValueError("unexpected modes CSV header")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        row = {"index": int(parts[0])}
        row.update({k: float(v) for k, v in zip(MODES_COLUMNS[1:], parts[1:])})
        rows.append(row)
    return rows


# -- symmetry -----------------------------------------------------------------

def symmetry_report(est: KoopmanEstimator, traj: Trajectory | None, cfg: RunConfig) -> dict:
    """Steady mode, its commutator residual with total S^z, and its drift on test data."""
    triplets = eigen_triplets(est)
    steady = steady_mode(triplets)
    n = int(round(np.log2(est.feature_dim) / 2))
    Psi = eigenfunction_operator(steady)
    report = {
        "steady_eigenvalue_re": steady.eigenvalue.real,
        "steady_eigenvalue_im": steady.eigenvalue.imag,
        "steady_abs_lambda": abs(steady.eigenvalue),
        "commutator_residual_sz_total": symmetry_residual(Psi, total_sz_op(n)),
        "psi_is_hermitian_error": float(np.max(np.abs(Psi - dagger(Psi)))),
    }
    if traj is not None:
        split = dataset_split(traj, cfg.train_fraction)
        test = np.vstack([split.y[-1:], split.test_states])
        values = test @ steady.right
        ref = values[0]
        drift = float(np.max(np.abs(values - ref)) / abs(ref)) if abs(ref) > 0 else float("inf")
        report["test_drift_relative"] = drift
        report["test_drift_bound"] = float(1.0 - abs(steady.eigenvalue) ** (len(test) - 1))
        report["test_snapshots"] = int(len(test) - 1)
    return report


def render_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"
