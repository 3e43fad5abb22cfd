"""Config parsing, run artifacts, sweep CSV."""

import json
from pathlib import Path

import pytest

from quorummpc.errors import ConfigError
from quorummpc.cli import (
    main,
    parse_config,
    resolved_quorum_size,
    run_experiment,
    sweep,
)


def write_config(tmp_path, text):
    path = tmp_path / "run.cfg"
    path.write_text(text)
    return str(path)


BASE = """
n = 8
p = 101
circuit = random
m = 8
depth = 5
inputs = random
quorum_size = 4
seed = 3
repetitions = 2
record = hash
"""


def test_parse_config_defaults_and_overrides(tmp_path):
    cfg = parse_config(write_config(tmp_path, BASE))
    assert cfg["n"] == 8 and cfg["p"] == 101
    assert cfg["strategy"] == "honest"
    assert resolved_quorum_size(cfg) == 4


def test_quorum_size_from_multiplier(tmp_path):
    cfg = parse_config(write_config(tmp_path, "n = 32\nquorum_multiplier = 2.0\n"))
    assert resolved_quorum_size(cfg) == 10


def test_bad_fraction_validation(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(write_config(tmp_path, "n = 8\nbad_fraction = 0.4\n"))


def test_malformed_line_reports_location(tmp_path):
    with pytest.raises(ConfigError) as err:
        parse_config(write_config(tmp_path, "n = 8\nnot a config line\n"))
    assert ":2:" in str(err.value)


def test_run_experiment_writes_metrics(tmp_path):
    path = write_config(tmp_path, BASE)
    status = run_experiment(path, out_dir=str(tmp_path / "out"))
    assert status == 0
    payload = json.loads((tmp_path / "out" / "metrics.json").read_text())
    assert payload["failures"] == 0
    assert len(payload["runs"]) == 2
    assert payload["config"]["n"] == 8  # self-describing artifact
    run = payload["runs"][0]
    assert run["verdict"] == "pass"
    assert run["metrics"]["max_msgs_sent"] > 0
    assert len(run["transcript_hash"]) == 64


def test_run_experiment_with_netlist_file(tmp_path):
    (tmp_path / "circuit.net").write_text(
        "input 1\ninput 2\ninput 3\ninput 4\n"
        "gate 2 mul x1 x2\ngate 3 add x3 x4\ngate 1 add g2 g3\noutput 1\n"
    )
    path = write_config(tmp_path, """
n = 4
p = 101
circuit = circuit.net
inputs = 5,6,7,8
quorum_size = 4
seed = 1
repetitions = 1
""")
    assert run_experiment(path, out_dir=str(tmp_path / "out")) == 0
    payload = json.loads((tmp_path / "out" / "metrics.json").read_text())
    assert payload["runs"][0]["expected_output"] == (5 * 6 + 7 + 8) % 101


def test_full_record_writes_transcript(tmp_path):
    path = write_config(tmp_path, BASE.replace("record = hash", "record = full")
                        .replace("repetitions = 2", "repetitions = 1"))
    assert run_experiment(path, out_dir=str(tmp_path / "out")) == 0
    log = (tmp_path / "out" / "transcript-3.log").read_text()
    first = log.splitlines()[0].split()
    assert len(first) == 5  # round sender recipient tag payload-hash


def test_sweep_csv(tmp_path):
    path = write_config(tmp_path, BASE.replace("repetitions = 2", "repetitions = 1"))
    status = sweep(path, "m", [4, 8], out_dir=str(tmp_path / "out"), seeds=1)
    assert status == 0
    lines = (tmp_path / "out" / "sweep.csv").read_text().strip().splitlines()
    assert lines[0].startswith("axis,value,seed")
    assert len(lines) == 3
    assert all(line.endswith("pass") for line in lines[1:])


def test_sweep_determinism(tmp_path):
    path = write_config(tmp_path, BASE.replace("repetitions = 2", "repetitions = 1"))
    sweep(path, "m", [6], out_dir=str(tmp_path / "a"), seeds=1)
    sweep(path, "m", [6], out_dir=str(tmp_path / "b"), seeds=1)
    assert (tmp_path / "a" / "sweep.csv").read_text() == (tmp_path / "b" / "sweep.csv").read_text()


def test_main_run_subcommand(tmp_path):
    path = write_config(tmp_path, BASE.replace("repetitions = 2", "repetitions = 1"))
    assert main(["run", "--config", path, "--out-dir", str(tmp_path / "out")]) == 0


def test_main_rejects_bad_config(tmp_path):
    path = write_config(tmp_path, "n = 8\nbad_fraction = 0.5\n")
    assert main(["run", "--config", path]) == 2


def test_bundled_example_config(tmp_path):
    from pathlib import Path

    bundled = Path(__file__).resolve().parent.parent / "configs" / "example-run.cfg"
    status = run_experiment(str(bundled), out_dir=str(tmp_path))
    assert status == 0
    payload = json.loads((tmp_path / "metrics.json").read_text())
    assert payload["failures"] == 0
    assert all(r["verdict"] == "pass" for r in payload["runs"])
