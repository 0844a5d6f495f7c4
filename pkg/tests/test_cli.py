import json

import pytest

from typhoon_resilience import cli, pipeline
from typhoon_resilience.grid_case import bundled_path
from typhoon_resilience.load_shed import LoadShedFailure, LoadShedModel
from typhoon_resilience.pipeline import ConfigError, RunConfig, StageError


def toy_config(tmp_path, **run):
    lines = ['[paths]', 'case = "bundled:toy4"', f'typhoon = "{bundled_path("mangkhut.toml")}"',
             f'pairwise = "{bundled_path("pairwise_expert.csv")}"',
             f'weights = "{bundled_path("weights_guangdong.csv")}"', '[run]']
    lines += [f"{k} = {json.dumps(v)}" for k, v in run.items()]
    p = tmp_path / "run.toml"
    p.write_text("\n".join(lines) + "\n")
    return p


def files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_flags_override_config(tmp_path):
    cfg_path = toy_config(tmp_path, J=3, seed=5)
    args = cli.build_parser().parse_args(["assess", "--config", str(cfg_path), "--J", "1"])
    cfg = cli.config_from_args(args)
    assert cfg.J == 1 and cfg.seed == 5
    assert cfg.case == "bundled:toy4"


def test_unknown_config_key(tmp_path):
    p = toy_config(tmp_path, wobble=1)
    with pytest.raises(ConfigError):
        RunConfig.from_file(p)
    assert cli.main(["assess", "--config", str(p), "--out", str(tmp_path / "o")]) == 2


def test_assess_writes_report_and_manifest(tmp_path):
    cfg = toy_config(tmp_path, J=2, R_set=1000.0)
    out = tmp_path / "o"
    assert cli.main(["assess", "--config", str(cfg), "--out", str(out)]) == 0
    report = (out / "assess_report.txt").read_text()
    assert "meets target; no strengthening required" in report
    man = json.loads((out / "manifest.json").read_text())
    assert man["subcommand"] == "assess" and man["seed"] == 0
    assert set(man["outputs"]) == {"assess_report.txt", "probabilities.csv"}
    assert "numpy" in man["versions"]


def test_byte_deterministic(tmp_path):
    cfg = toy_config(tmp_path, mode="hybrid", J=2)
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["assess", "--config", str(cfg), "--out", str(a)]) == 0
    assert cli.main(["assess", "--config", str(cfg), "--out", str(b), "--workers", "2"]) == 0
    assert files(a) == files(b)
    assert "comparison.csv" in files(a)


def test_strict_target_exit(tmp_path):
    cfg = toy_config(tmp_path, R_set=1.0)
    out = tmp_path / "o"
    # the toy corridors sit under the landfall with low design speeds, so R_sys is far above 1 MW
    assert cli.main(["assess", "--config", str(cfg), "--out", str(out), "--strict"]) == 4
    assert "target not met" in (out / "assess_report.txt").read_text()
    assert cli.main(["assess", "--config", str(cfg), "--out", str(out)]) == 0


def test_hybrid_needs_pairwise(tmp_path):
    p = tmp_path / "run.toml"
    p.write_text(f'[paths]\ncase = "bundled:toy3"\ntyphoon = "{bundled_path("mangkhut.toml")}"\n'
                 '[run]\nmode = "hybrid"\n')
    assert cli.main(["assess", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o").exists()


def test_failed_stage_leaves_no_artifacts(tmp_path, capsys):
    bad = tmp_path / "s.csv"
    bad.write_text('name,corridors\nS1,"1,77"\n')
    cfg = toy_config(tmp_path)
    out = tmp_path / "o"
    code = cli.main(["strategies", "--config", str(cfg), "--out", str(out), "--strategies", str(bad)])
    assert code == 2
    assert "stage 'strategies'" in capsys.readouterr().err
    assert not out.exists() or list(out.iterdir()) == []


def test_numeric_failure_exit(tmp_path, monkeypatch):
    def boom(self, failed=()):
        raise LoadShedFailure(failed, "infeasible")

    monkeypatch.setattr(LoadShedModel, "solve", boom)
    cfg = toy_config(tmp_path)
    assert cli.main(["assess", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3
    with pytest.raises(StageError) as err:
        pipeline.run("assess", RunConfig.from_file(cfg), tmp_path / "o")
    assert err.value.stage == "enumerate" and err.value.code == 3


def test_simulate_wind_and_failure_rates(tmp_path):
    cfg = toy_config(tmp_path, mode="hybrid")
    out = tmp_path / "o"
    assert cli.main(["simulate-wind", "--config", str(cfg), "--out", str(out)]) == 0
    rows = (out / "wind.csv").read_text().splitlines()
    assert rows[0] == "time_h,corridor_id,wind_ms"
    assert (len(rows) - 1) % 5 == 0
    assert cli.main(["failure-rates", "--config", str(cfg), "--out", str(out)]) == 0
    rows = (out / "failure_rates.csv").read_text().splitlines()
    assert rows[0] == "time_h,corridor_id,p_model,p_comprehensive"
    p_model, p_comp = (float(v) for v in rows[-1].split(",")[2:])
    assert p_model > 0 and p_comp > 0


def test_weights_from_synthetic_dataset(tmp_path):
    cfg = toy_config(tmp_path, trees=10, seed=3)
    out = tmp_path / "o"
    assert cli.main(["weights", "--config", str(cfg), "--out", str(out), "--dataset", "synthetic"]) == 0
    text = (out / "weights_report.txt").read_text()
    assert "source = synthetic(3)" in text
    assert (out / "schemes.csv").read_text().count("\n") == 1 + 3 * 7


def test_strategies_run(tmp_path):
    s = tmp_path / "s.csv"
    s.write_text('name,corridors\nA,"1"\nB,"2,3"\n')
    cfg = toy_config(tmp_path, R_set=1.0)
    out = tmp_path / "o"
    assert cli.main(["strategies", "--config", str(cfg), "--out", str(out), "--strategies", str(s)]) == 0
    lines = (out / "strategies.csv").read_text().splitlines()
    assert lines[0].startswith("# R_sys_MW")
    assert len(lines) == 4


def test_config_validation_messages(tmp_path):
    for flags in (["--mode", "fuzzy"], ["--workers", "0"], ["--force-k", "2"], ["--hardening", "paint"]):
        cfg = toy_config(tmp_path)
        assert cli.main(["assess", "--config", str(cfg), "--out", str(tmp_path / "o")] + flags) == 2
