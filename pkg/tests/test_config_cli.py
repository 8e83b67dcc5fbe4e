import json
import subprocess
import sys

import pytest
import yaml

from rewardlens.cli import run
from rewardlens.config import OUTPUT_ENV, ConfigError, load_bundled, load_config, parse_config

TINY = {
    "name": "tiny",
    "env": "highway",
    "seed": 4,
    "env_config": {"num_lanes": 3, "num_vehicles": 3, "road_length": 30, "episode_length": 15},
    "hyperparams": {"episodes": 20, "tau": 50},
    "record": {"episodes": 4},
    "summary": {"method": "highlights", "k": 3, "window": 2, "interval": 2, "replicates": 2},
    "judge": {"components": ["CL", "SU", "RML"]},
    "sanity": {"weights": [5, 5, 5], "eval_episodes": 2},
    "agents": [{"id": "a", "weights": [3, 1, 8]}, {"id": "b", "weights": [0, 0, 15]}],
}


def _write(tmp_path, doc=TINY, name="tiny.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc))
    return path


def test_bundled_configs_load():
    hw, pm = load_bundled("highway"), load_bundled("pacman")
    assert [a.id for a in hw.agents] == ["good_citizen", "fast_and_furious",
                                         "dazed_and_confused", "basic"]
    assert hw.agent("basic").weights == (0.0, 0.0, 15.0)
    assert hw.hp(1).epsilon_decay_episodes == 1600
    assert pm.judged_components() == ["NP", "PP", "BG"]
    assert pm.summary_spec().selection.value == "highlights-div"


@pytest.mark.parametrize("patch, match", [
    ({"env": "tetris"}, "env"),
    ({"agents": [{"id": "a", "weights": [1, 2]}]}, "weights"),
    ({"judge": {"components": ["CL", "XX"]}}, "XX"),
    ({"hyperparams": {"gamma": 1.5}}, "gamma"),
    ({"surprise": 1}, "surprise"),
    ({"agents": [{"id": "a", "weights": [1, 1, 1]}, {"id": "a", "weights": [1, 1, 1]}]}, "unique"),
])
def test_invalid_configs(patch, match):
    with pytest.raises(ConfigError, match=match):
        parse_config({**TINY, **patch}, "x.yaml")


def test_missing_config_exits_1(tmp_path, capsys):
    path = tmp_path / "nope.yaml"
    assert run(["train", str(path)]) == 1
    assert str(path) in capsys.readouterr().err


def test_unknown_flag_exits_1(tmp_path):
    with pytest.raises(SystemExit) as e:
        run(["train", str(_write(tmp_path)), "--bogus"])
    assert e.value.code == 1


def test_unknown_agent_exits_1(tmp_path, capsys):
    assert run(["train", str(_write(tmp_path)), "--agent", "zed", "--out", str(tmp_path)]) == 1
    assert "zed" in capsys.readouterr().err


def test_missing_stage_input_exits_2(tmp_path, capsys):
    assert run(["record", str(_write(tmp_path)), "--out", str(tmp_path / "o")]) == 2
    assert "qtable" in capsys.readouterr().err


def test_output_root_precedence(tmp_path, monkeypatch):
    cfg = load_config(_write(tmp_path))
    monkeypatch.delenv(OUTPUT_ENV, raising=False)
    assert str(cfg.output_root()) == "rewardlens-out/tiny"
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env"))
    assert cfg.output_root() == tmp_path / "env" / "tiny"
    assert cfg.output_root(tmp_path / "flag") == tmp_path / "flag" / "tiny"


def _pipeline(cfg, out):
    for cmd in (["train"], ["record"], ["summarize"],
                ["summarize", "--method", "frequency"], ["render"], ["judge"]):
        assert run(cmd + [str(cfg), "--out", str(out)]) == 0, cmd


def test_stages_end_to_end(tmp_path):
    cfg = _write(tmp_path)
    out = tmp_path / "out"
    _pipeline(cfg, out)
    root = out / "tiny"
    assert (root / "agents" / "a" / "qtable.tsv").is_file()
    assert (root / "agents" / "a" / "learning_curve.png").is_file()
    assert len(list((root / "traces" / "b").glob("*.jsonl"))) == 4
    assert sorted(p.name for p in (root / "summaries" / "a").iterdir()) == [
        "frequency_01.json", "frequency_02.json", "highlights.json"]
    for mode in ("h", "fs", "h+rd", "fs+rd"):
        assert (root / "reports" / "a" / mode / "report.html").is_file()
    doc = json.loads((root / "judge.json").read_text())
    assert set(doc["agents"]) == {"a", "b"}
    assert set(doc["agents"]["a"]["conditions"]) == {"H+RD", "FS+RD", "H", "FS"}
    assert (root / "judge.csv").read_text().startswith("agent,")


def test_frequency_replicates_have_distinct_seeds(tmp_path):
    cfg = _write(tmp_path)
    out = tmp_path / "out"
    assert run(["train", str(cfg), "--out", str(out), "--agent", "a"]) == 0
    assert run(["record", str(cfg), "--out", str(out), "--agent", "a"]) == 0
    assert run(["summarize", str(cfg), "--out", str(out), "--agent", "a",
                "--method", "frequency", "--replicates", "10"]) == 0
    docs = sorted((out / "tiny" / "summaries" / "a").glob("frequency_*.json"))
    assert len(docs) == 10
    seeds = {json.loads(p.read_text())["spec"]["seed"] for p in docs}
    assert len(seeds) == 10
    # fewer replicates on a rerun leaves no stale documents behind
    assert run(["summarize", str(cfg), "--out", str(out), "--agent", "a",
                "--method", "frequency", "--replicates", "3"]) == 0
    assert len(list((out / "tiny" / "summaries" / "a").glob("frequency_*.json"))) == 3


def test_rerun_is_byte_identical(tmp_path):
    cfg = _write(tmp_path)
    a, b = tmp_path / "a", tmp_path / "b"
    _pipeline(cfg, a)
    _pipeline(cfg, b)
    _pipeline(cfg, b)
    files = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    assert files == sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    for f in files:
        assert (a / f).read_bytes() == (b / f).read_bytes(), f


def test_seed_flag_changes_output(tmp_path):
    cfg = _write(tmp_path)
    for seed, d in ((1, "x"), (2, "y")):
        assert run(["train", str(cfg), "--out", str(tmp_path / d), "--seed", str(seed),
                    "--agent", "a"]) == 0
    qa = (tmp_path / "x" / "tiny" / "agents" / "a" / "qtable.tsv").read_text()
    qb = (tmp_path / "y" / "tiny" / "agents" / "a" / "qtable.tsv").read_text()
    assert qa != qb


def test_sanity_check_command(tmp_path, capsys):
    cfg = _write(tmp_path)
    assert run(["sanity-check", str(cfg), "--out", str(tmp_path), "--episodes", "3"]) == 0
    assert "insufficient training" in capsys.readouterr().out
    doc = json.loads((tmp_path / "tiny" / "sanity.json").read_text())
    assert doc["episodes"] == 3


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "rewardlens.cli", "--help"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("train", "record", "summarize", "render", "judge", "sanity-check", "demo"):
        assert cmd in res.stdout
