"""Experiment configuration: JSON validated against the shipped schema.

Every error names the offending key path and its line in the file.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .codec import DEFAULT_J_MAX
from .core import DistortionSpec, ReconDistribution, SourceModel, recon_from_description
from .oracle import DEFAULT_C_GRID, DEFAULT_TOL


class ConfigError(ValueError):
    pass


def load_schema() -> dict:
    return json.loads(resources.files(__package__).joinpath("config.schema.json").read_text())


# ---------------------------------------------------------------- source positions

_WS = re.compile(r"[ \t\r\n]*")
_NUM = re.compile(r"-?(?:0|[1-9]\d*)(?:\.\d+)?(?:[eE][+-]?\d+)?")


def value_lines(text: str) -> dict[tuple, int]:
    """Line (1-based) where the value at each key path starts.

    The text must already be valid JSON; only positions are recovered here.
    """
    lines: dict[tuple, int] = {}

    def line_at(i: int) -> int:
        return text.count("\n", 0, i) + 1

    def ws(i: int) -> int:
        return _WS.match(text, i).end()

    def string(i: int) -> int:
        i += 1
        while text[i] != '"':
            i += 2 if text[i] == "\\" else 1
        return i + 1

    def value(i: int, path: tuple) -> int:
        i = ws(i)
        lines[path] = line_at(i)
        ch = text[i]
        if ch == "{":
            i = ws(i + 1)
            if text[i] == "}":
                return i + 1
            while True:
                end = string(i)
                key = json.loads(text[i:end])
                lines.setdefault(path + (key,), line_at(i))
                i = ws(end) + 1  # colon
                i = ws(value(i, path + (key,)))
                if text[i] == "}":
                    return i + 1
                i = ws(i + 1)
        if ch == "[":
            i = ws(i + 1)
            if text[i] == "]":
                return i + 1
            n = 0
            while True:
                i = ws(value(i, path + (n,)))
                n += 1
                if text[i] == "]":
                    return i + 1
                i = i + 1
        if ch == '"':
            return string(i)
        for lit in ("true", "false", "null"):
            if text.startswith(lit, i):
                return i + len(lit)
        return _NUM.match(text, i).end()

    value(0, ())
    return lines


def _where(path, lines: dict, source: str) -> str:
    path = tuple(path)
    while path not in lines and path:
        path = path[:-1]
    dotted = ".".join(str(p) for p in path) or "<root>"
    return f"{source}:{lines.get(path, 1)}: {dotted}"


# ---------------------------------------------------------------- typed config

@dataclass
class PolicyConfig:
    name: str
    alpha: float = 3.0
    c: float | str = 1.0
    eta: float | str = "auto"
    lam: float = 1.0
    epsilon: float | None = None
    q1: list | None = None
    floor: float = 1e-3


@dataclass
class CalibrationConfig:
    deltas: tuple = (0.1, 0.01)
    ns: tuple = (10, 100, 1000)
    reps: int = 1000
    grid: tuple = DEFAULT_C_GRID
    seed: int = 0


@dataclass
class ExperimentConfig:
    source: SourceModel
    spec: DistortionSpec
    policy: PolicyConfig
    arms: list
    horizon: int
    seeds: list
    output: str | None = None
    j_max: int = DEFAULT_J_MAX
    tolerance: float = DEFAULT_TOL
    workers: int = 1
    calibration: CalibrationConfig = field(default_factory=CalibrationConfig)
    name: str = "experiment"
    raw: dict = field(default_factory=dict)


def _build_spec(d: dict, source: SourceModel) -> DistortionSpec:
    kind, level = d["kind"], float(d["level"])
    if kind == "hamming":
        size = d.get("v_size", source.symbol_size)
        return DistortionSpec.hamming(size, level, length=source.length)
    if kind == "table":
        if "table" not in d:
            raise KeyError("table")
        return DistortionSpec.from_table(np.array(d["table"], dtype=float), level)
    if "per_symbol" not in d:
        raise KeyError("per_symbol")
    return DistortionSpec.additive(np.array(d["per_symbol"], dtype=float), source.length, level)


def parse_config(text: str, source_name: str = "<config>") -> ExperimentConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source_name}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    lines = value_lines(text)
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(raw), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        msgs = [f"{_where(e.absolute_path, lines, source_name)}: {e.message}" for e in errors]
        raise ConfigError("\n".join(msgs))

    pol = raw["policy"]
    if "alpha" in pol and not pol["alpha"] > 2:
        raise ConfigError(f"{_where(('policy', 'alpha'), lines, source_name)}: alpha must exceed 2")

    def fail(path, msg):
        raise ConfigError(f"{_where(path, lines, source_name)}: {msg}")

    sc = raw["scenario"]
    try:
        src = SourceModel.product(sc["source"]["pmf"], sc["source"].get("length", 1))
    except ValueError as exc:
        fail(("scenario", "source"), str(exc))
    try:
        spec = _build_spec(sc["distortion"], src)
    except KeyError as exc:
        fail(("scenario", "distortion"), f"kind {sc['distortion']['kind']!r} needs {exc.args[0]!r}")
    except ValueError as exc:
        fail(("scenario", "distortion"), str(exc))
    if spec.x_size != src.alphabet_size:
        fail(("scenario", "distortion"), f"distortion is over {spec.x_size} source symbols, source has {src.alphabet_size}")

    policy = PolicyConfig(
        name=pol["name"],
        alpha=float(pol.get("alpha", 3.0)),
        c=pol.get("c", 1.0),
        eta=pol.get("eta", "auto"),
        lam=float(pol.get("lambda", 1.0)),
        epsilon=pol.get("epsilon"),
        q1=pol.get("q1"),
        floor=float(pol.get("floor", 1e-3)),
    )
    arms: list[ReconDistribution] = []
    for i, desc in enumerate(raw.get("arms", [])):
        try:
            Q = recon_from_description(desc, spec)
        except (ValueError, TypeError) as exc:
            fail(("arms", i), str(exc))
        if Q.y_size != spec.y_size:
            fail(("arms", i), f"arm is over {Q.y_size} reconstructions, distortion has {spec.y_size}")
        arms.append(Q)
    if policy.name == "lcb" and not arms:
        fail(("policy", "name"), "the lcb policy needs a non-empty 'arms' list")
    if policy.name == "lipschitz" and policy.eta == "auto":
        fail(("policy", "eta"), "the lipschitz policy needs a numeric eta")
    if policy.q1 is not None and len(policy.q1) != spec.v_size:
        fail(("policy", "q1"), f"q1 must have {spec.v_size} entries")

    cal = raw.get("calibration", {})
    calibration = CalibrationConfig(
        deltas=tuple(cal.get("deltas", (0.1, 0.01))),
        ns=tuple(cal.get("ns", (10, 100, 1000))),
        reps=int(cal.get("reps", 1000)),
        grid=tuple(cal.get("grid", DEFAULT_C_GRID)),
        seed=int(cal.get("seed", 0)),
    )
    return ExperimentConfig(
        source=src, spec=spec, policy=policy, arms=arms, horizon=int(raw["horizon"]), seeds=list(raw["seeds"]),
        output=raw.get("output"), j_max=int(raw.get("j_max", DEFAULT_J_MAX)),
        tolerance=float(raw.get("tolerance", DEFAULT_TOL)), workers=int(raw.get("workers", 1)),
        calibration=calibration, name=raw.get("name", "experiment"), raw=raw,
    )


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"{p}: cannot read config: {exc.strerror}") from None
    return parse_config(text, str(p))
