import math

import pytest

from lindkoop.config import (
    DEFAULT_OBSERVABLES,
    ConfigError,
    ObservableSpec,
    RunConfig,
    eval_number,
    format_config,
    load_config,
    parse_observables,
    read_config_text,
)


def test_defaults():
    cfg = RunConfig()
    assert (cfg.N, cfg.steps, cfg.rank, cfg.reg, cfg.dt) == (5, 200, 19, 1e-6, 0.5)
    assert cfg.J_par == pytest.approx(0.1 * math.pi)
    assert cfg.J_perp == pytest.approx(0.2 * math.pi)
    assert cfg.observables == DEFAULT_OBSERVABLES


@pytest.mark.parametrize("text,value", [
    ("0.1*pi", 0.1 * math.pi), ("pi/5", math.pi / 5), ("-2", -2.0), ("1e-6", 1e-6), ("2**3", 8.0),
])
def test_eval_number(text, value):
    assert eval_number(text) == pytest.approx(value)


@pytest.mark.parametrize("text", ["__import__('os')", "pi(", "e", "[1]"])
def test_eval_number_rejects(text):
    with pytest.raises(ConfigError):
        eval_number(text)


def test_parse_observables():
    obs = parse_observables("polarization:2, current:1,total_sz")
    assert [o.id for o in obs] == ["polarization_2", "current_1", "total_sz"]
    assert str(obs[0]) == "polarization:2"


@pytest.mark.parametrize("text", ["spin:1", "polarization", "total_sz:1", "current:x", ""])
def test_parse_observables_rejects(text):
    with pytest.raises(ConfigError):
        parse_observables(text)


def test_read_config_text_comments_and_duplicates():
    assert read_config_text("# header\nN = 3  # spins\n\nrank=4\n") == {"N": "3", "rank": "4"}
    with pytest.raises(ConfigError, match="duplicate"):
        read_config_text("N = 3\nN = 4\n")
    with pytest.raises(ConfigError, match=":1"):
        read_config_text("N 3\n")


def test_load_config_layers(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("N = 3\ninitial_label = d,u,u\nrank = 4\nJ_par = 0.05*pi\nobservables = current:2\n")
    cfg = load_config(path, ["rank=6"], output_dir="out")
    assert (cfg.N, cfg.rank, cfg.output_dir) == (3, 6, "out")
    assert cfg.J_par == pytest.approx(0.05 * math.pi)


def test_load_config_round_trip(tmp_path):
    cfg = RunConfig(N=3, initial_label="u,d,u", observables=(ObservableSpec("current", 2),))
    path = tmp_path / "c.cfg"
    path.write_text(format_config(cfg))
    assert load_config(path, output_dir=cfg.output_dir) == cfg


@pytest.mark.parametrize("override,match", [
    ("bogus=1", "unknown"), ("N=2.5", "integer"), ("gamma=-1", "gamma"), ("rank=0", "rank"),
    ("reg=0", "reg"), ("train_fraction=1", "train_fraction"), ("N=4", "initial_label"),
    ("observables=polarization:9", "site"), ("steps", "key=value"),
])
def test_invalid(override, match):
    with pytest.raises(ConfigError, match=match):
        load_config(None, [override])


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.cfg")
