"""Run configuration: flat ``key = value`` files with the experiment defaults."""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass, fields
from pathlib import Path

from .lindblad import SpinChainParams


class ConfigError(ValueError):
    """Invalid or unknown configuration entry."""


@dataclass(frozen=True)
class ObservableSpec:
    kind: str  # polarization | current | total_sz
    site: int | None = None

    KINDS = ("polarization", "current", "total_sz")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigError(f"unknown observable kind {self.kind!r}; expected one of {self.KINDS}")
        if self.kind == "total_sz":
            if self.site is not None:
                raise ConfigError("total_sz takes no site")
        elif self.site is None:
            raise ConfigError(f"observable {self.kind!r} needs a site, e.g. {self.kind}:1")

    @property
    def id(self) -> str:
        return self.kind if self.site is None else f"{self.kind}_{self.site}"

    def __str__(self) -> str:
        return self.kind if self.site is None else f"{self.kind}:{self.site}"


DEFAULT_OBSERVABLES = (
    ObservableSpec("polarization", 1),
    ObservableSpec("polarization", 5),
    ObservableSpec("current", 3),
)


@dataclass(frozen=True)
class RunConfig:
    N: int = 5
    J_par: float = 0.1 * math.pi
    J_perp: float = 0.2 * math.pi
    gamma: float = 0.01
    dt: float = 0.5
    steps: int = 200
    substeps: int = 50
    initial_label: str = "d,u,u,u,u"
    train_fraction: float = 0.5
    rank: int = 19
    reg: float = 1e-6
    observables: tuple = DEFAULT_OBSERVABLES
    output_dir: str = "lindkoop_out"

    def __post_init__(self):
        try:
            self.chain_params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        n_labels = len(self.initial_label.split(","))
        if n_labels != self.N:
            raise ConfigError(f"initial_label has {n_labels} sites but N = {self.N}")
        if not 0 < self.train_fraction < 1:
            raise ConfigError("train_fraction must lie in (0, 1)")
        if self.rank < 1:
            raise ConfigError("rank must be at least 1")
        if not self.reg > 0:
            raise ConfigError("reg must be positive")
        for obs in self.observables:
            if obs.site is not None and not 1 <= obs.site <= self.N:
                raise ConfigError(f"observable {obs} site outside 1..{self.N}")

    def chain_params(self) -> SpinChainParams:
        return SpinChainParams(
            N=self.N, J_par=self.J_par, J_perp=self.J_perp, gamma=self.gamma,
            dt=self.dt, steps=self.steps, substeps=self.substeps,
        )


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}


def eval_number(text: str) -> float:
    """Evaluate a numeric literal or simple arithmetic over numbers and ``pi``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        raise ConfigError(f"unsupported expression {text!r}")

    try:
        return ev(ast.parse(text.strip(), mode="eval"))
    except SyntaxError:
        raise ConfigError(f"cannot parse number {text!r}") from None


def parse_observables(text: str) -> tuple:
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        kind, _, site = item.partition(":")
        try:
            out.append(ObservableSpec(kind.strip(), int(site) if site.strip() else None))
        except ValueError as exc:
            raise ConfigError(f"bad observable {item!r}: {exc}") from None
    if not out:
        raise ConfigError("observables list is empty")
    return tuple(out)


def _convert(key: str, value: str):
    kind = _FIELD_TYPES[key]
    if key == "observables":
        return parse_observables(value)
    if kind == "int":
        v = eval_number(value)
        if v != int(v):
            raise ConfigError(f"{key} must be an integer, got {value!r}")
        return int(v)
    if kind == "float":
        return eval_number(value)
    return value.strip()


def parse_assignments(items: dict[str, str]) -> dict:
    out = {}
    for key, value in items.items():
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        out[key] = _convert(key, value)
    return out


def read_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    items: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        if key in items:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        items[key] = value.strip()
    return items


def load_config(path: str | Path | None = None, overrides: list[str] | None = None,
                output_dir: str | None = None) -> RunConfig:
    """Defaults, then the config file, then ``key=value`` overrides, then ``output_dir``."""
    items: dict[str, str] = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        items.update(read_config_text(text, str(path)))
    for ov in overrides or []:
        if "=" not in ov:
            raise ConfigError(f"override {ov!r} is not key=value")
        key, _, value = ov.partition("=")
        items[key.strip()] = value.strip()
    values = parse_assignments(items)
    if output_dir is not None:
        values["output_dir"] = output_dir
    return RunConfig(**values)


def format_config(cfg: RunConfig) -> str:
    lines = []
    for f in fields(RunConfig):
        v = getattr(cfg, f.name)
        if f.name == "observables":
            v = ", ".join(str(o) for o in v)
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
