"""Experiment runner: single runs, strategy sweeps, scaling sweeps.

Configs are flat key = value text; `#` starts a comment.  Keys:

    n = 8                    player count
    p = 2305843009213693951  field modulus (default 2^61 - 1)
    circuit = random         or a netlist path
    m = 16                   gate count for random circuits
    depth = 6                height cap for random circuits
    inputs = random          or comma-separated residues
    quorum_multiplier = 2.0  quorum size = max(4, ceil(c * log2 n))
    quorum_size = 7          overrides the multiplier when set
    epsilon = 0.05           formation margin; bad_fraction <= 1/3 - epsilon
    bad_fraction = 0.0       adversary-controlled fraction
    strategy = honest        catalog strategy name
    seed = 1
    repetitions = 1
    formation_retries = 1000
    record = hash            none | hash | full | adversary

Outputs per run: metrics.json (with the resolved config embedded),
transcript.log when recording is on, and a pass/fail verdict against
plain evaluation of the committed inputs.  The process exit status
reflects the verdict.
"""

from __future__ import annotations

import argparse
import json
import math
import random
import statistics
import sys
from pathlib import Path

from .circuit import parse_circuit, random_circuit
from .errors import ConfigError, QuorumMpcError
from .field import DEFAULT_PRIME, Field
from .protocol import run_protocol
from .quorum import default_quorum_size

DEFAULTS = {
    "p": DEFAULT_PRIME,
    "circuit": "random",
    "m": None,
    "depth": 6,
    "inputs": "random",
    "quorum_multiplier": 2.0,
    "quorum_size": None,
    "epsilon": 0.05,
    "bad_fraction": 0.0,
    "strategy": "honest",
    "seed": 1,
    "repetitions": 1,
    "formation_retries": 1000,
    "record": "hash",
}

_INT_KEYS = {"n", "p", "m", "depth", "seed", "repetitions", "formation_retries", "quorum_size"}
_FLOAT_KEYS = {"quorum_multiplier", "epsilon", "bad_fraction"}


def parse_config(path: str | Path) -> dict:
    path = Path(path)
    values = dict(DEFAULTS)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}")
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_no}: want key = value")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key in _INT_KEYS:
            try:
                values[key] = int(value)
            except ValueError:
                raise ConfigError(f"{path}:{line_no}: {key} wants an integer")
        elif key in _FLOAT_KEYS:
            try:
                values[key] = float(value)
            except ValueError:
                raise ConfigError(f"{path}:{line_no}: {key} wants a number")
        else:
            values[key] = value
    if "n" not in values:
        raise ConfigError(f"{path}: missing required key n")
    validate_config(values, source=str(path))
    values["_dir"] = str(path.parent)
    return values


def validate_config(cfg: dict, source: str = "config"):
    if cfg["n"] < 4:
        raise ConfigError(f"{source}: need n >= 4")
    if cfg["bad_fraction"] > 1 / 3 - cfg["epsilon"] + 1e-12:
        raise ConfigError(
            f"{source}: bad_fraction {cfg['bad_fraction']} exceeds 1/3 - epsilon")
    size = resolved_quorum_size(cfg)
    if size < 4:
        raise ConfigError(f"{source}: quorum size {size} below the minimum of 4")
    if cfg["record"] not in ("none", "hash", "full", "adversary"):
        raise ConfigError(f"{source}: unknown record mode {cfg['record']!r}")


def resolved_quorum_size(cfg: dict) -> int:
    if cfg.get("quorum_size"):
        return cfg["quorum_size"]
    return max(4, math.ceil(cfg["quorum_multiplier"] * math.log2(max(cfg["n"], 2))))


def build_circuit(cfg: dict, seed: int):
    if cfg["circuit"] == "random":
        m = cfg["m"] if cfg["m"] else 2 * cfg["n"]
        return random_circuit(cfg["n"], m, cfg["depth"], random.Random(f"circuit:{seed}"))
    path = Path(cfg.get("_dir", ".")) / cfg["circuit"]
    return parse_circuit(path.read_text())


def build_inputs(cfg: dict, field: Field, seed: int) -> list[int]:
    if cfg["inputs"] == "random":
        rng = random.Random(f"inputs:{seed}")
        return [rng.randrange(field.p) for _ in range(cfg["n"])]
    try:
        xs = [int(v) % field.p for v in str(cfg["inputs"]).split(",")]
    except ValueError:
        raise ConfigError("inputs wants 'random' or comma-separated integers")
    if len(xs) != cfg["n"]:
        raise ConfigError(f"{len(xs)} inputs for n = {cfg['n']}")
    return xs


def bad_set_for(cfg: dict, seed: int) -> frozenset:
    count = int(cfg["bad_fraction"] * cfg["n"])
    if count == 0:
        return frozenset()
    rng = random.Random(f"badset:{seed}")
    return frozenset(rng.sample(range(cfg["n"]), count))


def execute_run(cfg: dict, seed: int) -> dict:
    """One run; returns the report dict with metrics and verdict."""
    field = Field(cfg["p"])
    circuit = build_circuit(cfg, seed)
    inputs = build_inputs(cfg, field, seed)
    result = run_protocol(
        field, circuit, inputs,
        bad_set=bad_set_for(cfg, seed),
        strategy=cfg["strategy"],
        seed=seed,
        quorum_size=resolved_quorum_size(cfg),
        record=cfg["record"],
        formation_retries=cfg["formation_retries"],
    )
    expect, _ = circuit.eval_plain(field, result.committed_inputs)
    bad = bad_set_for(cfg, seed)
    good_outputs = {p: v for p, v in result.outputs.items() if p not in bad}
    verdict = all(v == expect for v in good_outputs.values())
    metrics = result.metrics.as_dict()
    return {
        "seed": seed,
        "verdict": "pass" if verdict else "fail",
        "expected_output": expect,
        "metrics": metrics,
        "transcript_hash": result.transcript_hash,
        "defaults_applied": sorted(result.harness["defaults"]),
        "result": result,
    }


def run_experiment(config_path: str, out_dir: str | None = None,
                   seed: int | None = None) -> int:
    """CLI `run`: execute repetitions, write reports, return exit status."""
    cfg = parse_config(config_path)
    if seed is not None:
        cfg["seed"] = seed
    out = Path(out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    failures = 0
    reports = []
    for rep in range(cfg["repetitions"]):
        run_seed = cfg["seed"] + rep
        report = execute_run(cfg, run_seed)
        result = report.pop("result")
        reports.append(report)
        if report["verdict"] != "pass":
            failures += 1
        if cfg["record"] == "full":
            (out / f"transcript-{run_seed}.log").write_text(result.transcript_dump)
    payload = {
        "config": {k: v for k, v in cfg.items() if not k.startswith("_")},
        "runs": reports,
        "failures": failures,
    }
    (out / "metrics.json").write_text(json.dumps(payload, indent=2) + "\n")
    print(f"{cfg['repetitions']} runs, {failures} failures -> metrics.json")
    return 0 if failures == 0 else 1


def sweep(config_path: str, axis: str, values: list[int],
          out_dir: str | None = None, seeds: int = 3) -> int:
    """CLI `sweep`: one CSV row per (axis value, seed)."""
    if axis not in ("n", "m", "bad-fraction"):
        raise ConfigError(f"unknown sweep axis {axis!r}")
    base = parse_config(config_path)
    out = Path(out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    rows = ["axis,value,seed,max_msgs,median_msgs,max_gate_msgs,max_field_ops,verdict"]
    any_fail = False
    for value in values:
        cfg = dict(base)
        if axis == "n":
            cfg["n"] = int(value)
            if base["circuit"] == "random" and base["m"] is None:
                cfg["m"] = None
        elif axis == "m":
            cfg["m"] = int(value)
        else:
            cfg["bad_fraction"] = float(value)
        validate_config(cfg, source=f"sweep {axis}={value}")
        for rep in range(seeds):
            run_seed = cfg["seed"] + rep
            try:
                report = execute_run(cfg, run_seed)
            except QuorumMpcError as exc:
                rows.append(f"{axis},{value},{run_seed},,,,,{type(exc).__name__}")
                any_fail = True
                continue
            m = report["metrics"]
            rows.append(
                f"{axis},{value},{run_seed},{m['max_msgs_sent']},"
                f"{statistics.median(m['msgs_sent'])},"
                f"{max(m['phase_msgs']['gate'])},{max(m['field_ops'])},"
                f"{report['verdict']}"
            )
            if report["verdict"] != "pass":
                any_fail = True
    csv_text = "\n".join(rows) + "\n"
    (out / "sweep.csv").write_text(csv_text)
    print(f"{len(rows) - 1} rows -> sweep.csv")
    return 1 if any_fail else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="quorummpc")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out-dir", default=".")

    p_sweep = sub.add_parser("sweep", help="sweep one axis")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--axis", required=True, choices=["n", "m", "bad-fraction"])
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated axis values")
    p_sweep.add_argument("--seeds", type=int, default=3)
    p_sweep.add_argument("--out-dir", default=".")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return run_experiment(args.config, args.out_dir, args.seed)
        values = [float(v) if "." in v else int(v) for v in args.values.split(",")]
        return sweep(args.config, args.axis, values, args.out_dir, args.seeds)
    except (ConfigError, QuorumMpcError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
