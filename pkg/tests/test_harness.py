import json
from pathlib import Path

import numpy as np
import pytest
from scipy import stats as sps

from clustermax import cli, harness
from clustermax.config import load_config, parse_config
from clustermax.errors import ConfigurationError
from clustermax.rng import derive_stream, stream_key

PROCESS = """\
experiment = process-maxima
replications = 60
master_seed = 5
horizons = 50, 100

[marks]
family = pareto
alpha = 2

[parent]
law = exponential
nu = 1

[mechanism]
kind = renewal
size = poisson
mu = 1
offsets = exponential
theta = 1
"""

HEAVY_THRESHOLD = """\
experiment = tail-ratio
replications = 20
master_seed = 3
horizons = 100
draws_per_replication = 1000

[marks]
family = pareto
alpha = 2

[policy]
kind = fixed-threshold
w_family = pareto
w_alpha = 0.5
"""


def write(tmp_path, text, name="exp.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


# -- configuration ------------------------------------------------------------

def test_parse_round_trip():
    cfg = parse_config(PROCESS)
    assert cfg.experiment == "process-maxima"
    assert cfg.horizons == [50.0, 100.0]
    assert cfg.section("mechanism")["kind"] == "renewal"
    assert cfg.digest() == parse_config(PROCESS + "\n# trailing comment\n").digest()


@pytest.mark.parametrize("edit, line", [
    (lambda t: t.replace("alpha = 2", "alpah = 2"), 8),
    (lambda t: t.replace("nu = 1", "nu = 1\nnu = 2"), 13),
    (lambda t: t.replace("[parent]", "[parents]"), 10),
    (lambda t: t.replace("theta = 1", "theta = fast"), 19),
    (lambda t: t.replace("kind = renewal", "kind = spiral"), 15),
    (lambda t: t.replace("replications = 60", "replications = 0"), 2),
    (lambda t: t + "[policy]\nkind = deterministic\n", 20),
    (lambda t: t.replace("nu = 1", "nu = -1"), 10),
    (lambda t: t.split("[mechanism]")[0]
     + "[mechanism]\nkind = hawkes\n[fertility]\nkernel = exponential\nkappa = 1.5\n", 16),
], ids=["unknown-key", "duplicate", "unknown-section", "bad-float", "bad-choice",
        "nonpositive", "unused-section", "bad-rate", "supercritical"])
def test_configuration_errors_carry_lines(edit, line):
    text = edit(PROCESS)
    with pytest.raises(ConfigurationError) as err:
        harness.validate(parse_config(text))
    assert err.value.line == line, str(err.value)
    assert str(err.value).startswith(f"line {line}:")


def test_missing_required_key():
    with pytest.raises(ConfigurationError, match="master_seed"):
        parse_config(PROCESS.replace("master_seed = 5\n", ""))


def test_weibull_rejects_positive_levels():
    text = HEAVY_THRESHOLD.replace("family = pareto\nalpha = 2", "family = uniform\ntheta = 1")
    with pytest.raises(ConfigurationError, match="no tail mass"):
        harness.validate(parse_config(text))


def test_cli_exit_codes(tmp_path, capsys):
    good = write(tmp_path, PROCESS)
    assert cli.main(["validate", str(good)]) == 0
    bad = write(tmp_path, PROCESS.replace("alpha = 2", "alpah = 2"), "bad.cfg")
    assert cli.main(["validate", str(bad)]) == 2
    assert "line 8" in capsys.readouterr().err
    assert cli.main(["run", str(tmp_path / "missing.cfg")]) == 2
    with pytest.raises(SystemExit):
        cli.main(["run", str(good), "--seed", "-1"])


def test_cap_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, HEAVY_THRESHOLD)
    assert cli.main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 3
    err = capsys.readouterr().err
    assert "capped realization" in err and "replication" in err
    assert (tmp_path / "o" / "error.txt").exists()


def test_cap_disabled_runs(tmp_path):
    cfg = write(tmp_path, HEAVY_THRESHOLD + "cap = 0\n")
    code, summary = harness.run_experiment(parse_config(cfg.read_text()), out=tmp_path / "o")
    assert code in (0, 1)
    assert all(not c["asserted"] for c in summary["checks"])


# -- runs ---------------------------------------------------------------------

def test_run_artifacts(tmp_path):
    cfg = parse_config(PROCESS)
    code, summary = harness.run_experiment(cfg, out=tmp_path)
    header, table = harness.read_results_csv(tmp_path / "results.csv")
    assert header[:5] == ["experiment", "horizon", "replication", "seedHigh", "seedLow"]
    assert len(table["experiment"]) == 60 * 2
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["configHash"] == cfg.digest() and manifest["masterSeed"] == 5
    assert json.loads((tmp_path / "summary.json").read_text())["checks"]
    assert list((tmp_path / "plots").iterdir())
    # seeds in the file regenerate the stream
    hi, lo = stream_key(5, 3, 1)
    row = np.flatnonzero((table["replication"] == 3) & (table["horizon"] == 100))[0]
    assert (table["seedHigh"][row], table["seedLow"][row]) == (hi, lo)


def test_summary_recomputes_from_csv(tmp_path):
    cfg = parse_config(PROCESS)
    harness.run_experiment(cfg, out=tmp_path)
    _, table = harness.read_results_csv(tmp_path / "results.csv")
    again = harness.summarize(cfg, harness.build_model(cfg), table)
    stored = json.loads((tmp_path / "summary.json").read_text())
    stored.pop("masterSeed")
    assert json.loads(json.dumps(again, default=harness._json_default)) == stored


def test_large_seeds_survive_the_csv(tmp_path):
    cfg = parse_config(PROCESS.replace("replications = 60", "replications = 3"))
    seed = 2**64 - 5
    harness.run_experiment(cfg, out=tmp_path, seed=seed)
    _, table = harness.read_results_csv(tmp_path / "results.csv")
    assert int(table["seedHigh"][0]) == seed
    assert int(table["seedLow"][-1]) == stream_key(seed, 2, 1)[1]


def test_results_identical_across_workers(tmp_path):
    cfg = parse_config(PROCESS)
    harness.run_experiment(cfg, out=tmp_path / "w1", workers=1)
    harness.run_experiment(cfg, out=tmp_path / "w2", workers=2)
    a = (tmp_path / "w1" / "results.csv").read_bytes()
    b = (tmp_path / "w2" / "results.csv").read_bytes()
    assert a == b


def test_seed_override_changes_results(tmp_path):
    cfg = parse_config(PROCESS)
    harness.run_experiment(cfg, out=tmp_path / "a")
    harness.run_experiment(cfg, out=tmp_path / "b", seed=6)
    assert (tmp_path / "a" / "results.csv").read_bytes() != \
        (tmp_path / "b" / "results.csv").read_bytes()


def test_output_precedence(tmp_path, monkeypatch):
    cfg_path = write(tmp_path, PROCESS.replace("replications = 60", "replications = 2"))
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv(harness.OUT_ENV, str(tmp_path / "from_env"))
    assert cli.main(["run", str(cfg_path)]) in (0, 1)
    assert (tmp_path / "from_env" / "results.csv").exists()
    assert cli.main(["run", str(cfg_path), "--out", str(tmp_path / "flag")]) in (0, 1)
    assert (tmp_path / "flag" / "results.csv").exists()


# -- streams ------------------------------------------------------------------

def test_streams_are_reproducible():
    a = derive_stream(99, 4, 2).random(10**4)
    assert np.array_equal(a, derive_stream(99, 4, 2).random(10**4))


def test_streams_differ():
    firsts = {derive_stream(99, r, h).integers(0, 2**63) for r in range(500) for h in range(2)}
    assert len(firsts) == 1000


def test_stream_first_draws_uniform():
    u = np.array([derive_stream(m, r, h).random() for m in range(10) for r in range(500)
                  for h in range(2)])
    assert u.size == 10**4
    assert sps.kstest(u, "uniform").statistic < 1.628 / np.sqrt(u.size)


def test_stream_key_bounds():
    with pytest.raises(ValueError):
        stream_key(1, 2**32, 0)
    assert stream_key(1, 1, 2) == (1, (1 << 32) | 2)


@pytest.mark.parametrize("path", sorted((Path(__file__).parent.parent / "configs").glob("*.cfg")),
                         ids=lambda p: p.stem)
def test_shipped_configs_validate(path):
    assert harness.validate(load_config(path))


def test_heavy_delay_trend_not_asserted(tmp_path):
    text = (PROCESS.replace("process-maxima", "leftover-trend")
            .replace("horizons = 50, 100", "horizons = 10, 20, 40")
            .replace("replications = 60", "replications = 5")
            .replace("offsets = exponential\ntheta = 1", "offsets = lomax\nbeta = 0.3"))
    _, summary = harness.run_experiment(parse_config(text), out=tmp_path)
    trend = [c for c in summary["checks"] if c["name"] == "J_t/t decreasing"]
    assert len(trend) == 1 and trend[0]["asserted"] is False
