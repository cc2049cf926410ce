"""Command-line front end: ``lindkoop {simulate,fit,forecast,modes,symmetry,report}``.

Exit codes: 0 success, 1 usage/config error, 2 numerical-invariant failure,
3 I/O failure.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from . import pipeline as pl
from .acceptance import Criterion, evaluate_all
from .config import ConfigError, RunConfig, format_config, load_config
from .koopman import DefectiveSpectrumError, format_estimator, read_estimator, write_estimator
from .lindblad import FormatError, InvariantError, format_trajectory, read_trajectory, write_trajectory
from .propagator import AVAILABLE_BACKENDS

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3

logger = logging.getLogger("lindkoop")


class MissingArtifactError(OSError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _out(cfg: RunConfig) -> Path:
    return Path(cfg.output_dir)


def _path(args, name: str, cfg: RunConfig, default: str) -> Path:
    explicit = getattr(args, name, None)
    return Path(explicit) if explicit else _out(cfg) / default


def _require(paths: dict[str, tuple[Path, str]]) -> None:
    missing = [f"{label} ({p}; produced by '{stage}')" for label, (p, stage) in paths.items() if not p.exists()]
    if missing:
        raise MissingArtifactError("missing artifacts: " + ", ".join(missing))


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def cmd_simulate(args, cfg: RunConfig) -> int:
    traj = pl.run_simulation(cfg, backend=args.backend)
    path = _path(args, "trajectory", cfg, pl.TRAJECTORY_FILE)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_trajectory(traj, path)
    diag = pl.conservation_diagnostics(traj)
    print(f"wrote {len(traj)} snapshots to {path}")
    for key, value in diag.items():
        print(f"  {key}: {value:.3e}")
    return EXIT_OK


def cmd_fit(args, cfg: RunConfig) -> int:
    tpath = _path(args, "trajectory", cfg, pl.TRAJECTORY_FILE)
    _require({"trajectory": (tpath, "simulate")})
    traj = read_trajectory(tpath)
    fit = pl.run_fit(traj, cfg)
    epath = _path(args, "estimator", cfg, pl.ESTIMATOR_FILE)
    write_estimator(fit.estimator, epath)
    print(f"wrote estimator to {epath}")
    print(f"  training pairs: {fit.split.n_pairs}")
    print(f"  training residual: {fit.training_residual:.6e}")
    print(f"  objective: {fit.objective:.6e}")
    print(f"  numerical rank: {fit.numerical_rank}")
    return EXIT_OK


def cmd_forecast(args, cfg: RunConfig) -> int:
    tpath = _path(args, "trajectory", cfg, pl.TRAJECTORY_FILE)
    epath = _path(args, "estimator", cfg, pl.ESTIMATOR_FILE)
    _require({"trajectory": (tpath, "simulate"), "estimator": (epath, "fit")})
    series = pl.forecast_series(read_estimator(epath), read_trajectory(tpath), cfg)
    path = _out(cfg) / pl.FORECAST_FILE
    _write(path, pl.render_forecast_csv(series))
    print(f"wrote forecasts of {', '.join(s.observable_id for s in series)} to {path}")
    return EXIT_OK


def cmd_modes(args, cfg: RunConfig) -> int:
    epath = _path(args, "estimator", cfg, pl.ESTIMATOR_FILE)
    _require({"estimator": (epath, "fit")})
    text = pl.render_modes_csv(read_estimator(epath))
    path = _out(cfg) / pl.MODES_FILE
    _write(path, text)
    print(f"wrote {len(text.splitlines()) - 1} modes to {path}")
    return EXIT_OK


def cmd_symmetry(args, cfg: RunConfig) -> int:
    epath = _path(args, "estimator", cfg, pl.ESTIMATOR_FILE)
    tpath = _path(args, "trajectory", cfg, pl.TRAJECTORY_FILE)
    _require({"estimator": (epath, "fit")})
    traj = read_trajectory(tpath) if tpath.exists() else None
    rep = pl.symmetry_report(read_estimator(epath), traj, cfg)
    path = _out(cfg) / pl.SYMMETRY_FILE
    _write(path, pl.render_json(rep))
    lam = complex(rep["steady_eigenvalue_re"], rep["steady_eigenvalue_im"])
    print(f"steady-mode eigenvalue: {lam.real:.6f}{lam.imag:+.2e}j (|lambda| = {abs(lam):.6f})")
    print(f"||[Psi_1, Sz_tot]|| / (||Psi_1|| ||Sz_tot||) = {rep['commutator_residual_sz_total']:.3e}")
    if "test_drift_relative" in rep:
        print(f"psi_1 drift over {rep['test_snapshots']} test snapshots: {rep['test_drift_relative']:.3%} "
              f"(|lambda_1|^n bound {rep['test_drift_bound']:.3%})")
    return EXIT_OK


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def rerun_artifacts(cfg: RunConfig, backend: str | None = None) -> dict[str, str]:
    """Re-create every stage output in memory, as text."""
    traj = pl.run_simulation(cfg, backend=backend)
    est = pl.run_fit(traj, cfg).estimator
    return {
        pl.TRAJECTORY_FILE: format_trajectory(traj),
        pl.ESTIMATOR_FILE: format_estimator(est),
        pl.FORECAST_FILE: pl.render_forecast_csv(pl.forecast_series(est, traj, cfg)),
        pl.MODES_FILE: pl.render_modes_csv(est),
        pl.SYMMETRY_FILE: pl.render_json(pl.symmetry_report(est, traj, cfg)),
    }


def build_report(cfg: RunConfig, backend: str | None = None) -> dict:
    out = _out(cfg)
    stages = {
        pl.TRAJECTORY_FILE: "simulate",
        pl.ESTIMATOR_FILE: "fit",
        pl.FORECAST_FILE: "forecast",
        pl.MODES_FILE: "modes",
        pl.SYMMETRY_FILE: "symmetry",
    }
    _require({name: (out / name, stage) for name, stage in stages.items()})
    traj = read_trajectory(out / pl.TRAJECTORY_FILE)
    est = read_estimator(out / pl.ESTIMATOR_FILE)
    criteria = evaluate_all(traj, est, cfg, backend=backend)

    fresh = rerun_artifacts(cfg, backend=backend)
    mismatched = [name for name, text in fresh.items() if (out / name).read_text() != text]
    criteria.append(Criterion(12, "determinism: re-run reproduces every artifact byte for byte",
                              not mismatched, "all identical", not mismatched, {"mismatched": mismatched}))
    return {
        "config": {k: (", ".join(map(str, v)) if k == "observables" else v)
                   for k, v in asdict(cfg).items() if k != "output_dir"},
        "artifacts_sha256": {name: _sha256(out / name) for name in stages},
        "criteria": [c.as_dict() for c in criteria],
        "all_passed": all(c.passed for c in criteria),
    }


def cmd_report(args, cfg: RunConfig) -> int:
    report = build_report(cfg, backend=args.backend)
    path = _out(cfg) / pl.REPORT_FILE
    _write(path, pl.render_json(report))
    for c in report["criteria"]:
        print(Criterion(**c).line())
    print(f"wrote {path}")
    return EXIT_OK


COMMANDS = {
    "simulate": (cmd_simulate, "integrate the Lindblad equation and write the trajectory"),
    "fit": (cmd_fit, "learn the reduced-rank Koopman estimator"),
    "forecast": (cmd_forecast, "write truth vs forecast CSV for the configured observables"),
    "modes": (cmd_modes, "write eigenvalues, decay rates and frequencies"),
    "symmetry": (cmd_symmetry, "steady mode and its commutator with total S^z"),
    "report": (cmd_report, "evaluate every reproduction criterion"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lindkoop", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--output-dir", help="directory for all artifacts")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
        p.add_argument("--backend", choices=AVAILABLE_BACKENDS, default=None,
                       help="integrator backend (default: compiled when built)")
        if name in ("simulate", "fit", "forecast", "symmetry"):
            p.add_argument("--trajectory", help="trajectory file (default: <output-dir>/trajectory.txt)")
        if name in ("fit", "forecast", "modes", "symmetry"):
            p.add_argument("--estimator", help="estimator file (default: <output-dir>/estimator.txt)")
    p = sub.add_parser("show-config", help="print the resolved configuration")
    p.add_argument("--config")
    p.add_argument("--output-dir")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.set, args.output_dir)
        if args.command == "show-config":
            sys.stdout.write(format_config(cfg))
            return EXIT_OK
        return COMMANDS[args.command][0](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InvariantError, DefectiveSpectrumError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, FormatError) as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
