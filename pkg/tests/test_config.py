import pytest

from srtlab.config import (ConfigError, RunManifest, ScenarioConfig, Uniform, env_overrides,
                           load_config, parse_config)
from srtlab.contracts import BeliefMode


def test_defaults_round_trip_through_text():
    cfg = ScenarioConfig()
    assert ScenarioConfig(**parse_config(cfg.render())) == cfg


def test_parse_values_and_comments():
    text = """
    # comment
    n = 6
    risky_asset = uniform( 1 , 2 )   # trailing
    policies = all
    zeta = auto
    belief = Full
    """
    v = parse_config(text)
    assert v == {"n": 6, "risky_asset": Uniform(1.0, 2.0),
                 "policies": ("notax", "tobin", "srt"), "zeta": None, "belief": BeliefMode.FULL}


@pytest.mark.parametrize("text, fragment", [
    ("n 5", "expected key = value"),
    ("bogus = 1", "unknown key"),
    ("n = five", "cannot parse"),
    ("risky_asset = normal(0, 1)", "uniform(lo, hi)"),
    ("risky_asset = uniform(2, 1)", "bad bounds"),
])
def test_parse_errors(text, fragment):
    with pytest.raises(ConfigError, match=fragment.replace("(", r"\(").replace(")", r"\)")):
        parse_config(text)


@pytest.mark.parametrize("changes", [
    {"n": 0}, {"steps": 0}, {"maturity": 0}, {"shock_prob": 1.5}, {"common_prior_q": -0.1},
    {"hazard_rate": Uniform(-1, 0)}, {"loan_size": 0.0}, {"epsilon": 0.0}, {"kappa": -0.01},
    {"zeta": -1.0}, {"policies": ("vat",)}, {"policies": ()}, {"reservation_rate": float("nan")},
])
def test_validation_rejects(changes):
    with pytest.raises(ConfigError):
        ScenarioConfig(**changes)


def test_precedence_file_then_env_then_overrides(tmp_path):
    p = tmp_path / "s.cfg"
    p.write_text("seed = 1\nn = 4\nsteps = 9\n")
    env = {"SRTLAB_SEED": "2", "SRTLAB_STEPS": "3", "OTHER": "x"}
    assert env_overrides(env) == {"seed": 2, "steps": 3}
    cfg = load_config(p, {"seed": "5"}, environ=env)
    assert (cfg.seed, cfg.n, cfg.steps) == (5, 4, 3)


def test_missing_file_names_path(tmp_path):
    with pytest.raises(ConfigError, match="nope.cfg"):
        load_config(tmp_path / "nope.cfg", environ={})
    with pytest.raises(ConfigError, match="unknown key"):
        load_config(None, {"colour": "red"}, environ={})


def test_manifest_round_trip():
    cfg = ScenarioConfig(n=5, zeta=0.25, belief=BeliefMode.COMMON_PRIOR, common_prior_q=0.1)
    m = RunManifest("a.cfg", cfg, "out", "0.1.0", 5, "2024-01-01T00:00:00+00:00",
                    ("notax.csv",), {"esl_conditional_factor": None, "notax_mean_esl": 0.5})
    assert RunManifest.parse(m.render()) == m
