"""Experiment configuration: flat ``key = value`` text with ``[section]`` headers.

Keys outside a section (or under ``[run]``) are run parameters; keys under
``[measure]`` describe the measure.  ``#`` starts a comment.  Lists are comma
separated.  Every problem found is reported, each with its line number.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import ArgumentError
from .rng import DEFAULT_SEED

COMMANDS = ("spectrum", "profile", "fr", "approx", "stability", "endpoint", "uncertainty", "kuznecov", "volume")
MANIFOLDS = ("torus1", "torus2", "torus3", "sphere2")
MEASURE_KINDS = ("subtorus", "segment", "moment-curve", "equator", "latitude", "atom-set", "product-cantor")


class ConfigError(ArgumentError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid config:\n" + "\n".join(f"  {v}" for v in self.violations))


def _float(s):
    v = float(s)
    if not math.isfinite(v):
        raise ValueError("not finite")
    return v


def _int(s):
    v = float(s)
    if v != int(v):
        raise ValueError("not an integer")
    return int(v)


def _floats(s):
    return tuple(_float(x) for x in s.split(",") if x.strip())


def _str(s):
    return s.strip()


def _points(s):
    # "theta, phi; theta, phi" or "x, y; x, y"
    return tuple(tuple(_float(x) for x in p.split(",")) for p in s.split(";") if p.strip())


# key -> (parser, check returning an error string or None)
RUN_KEYS = {
    "command": (_str, lambda v: None if v in COMMANDS else f"command must be one of {', '.join(COMMANDS)}"),
    "manifold": (_str, lambda v: None if v in MANIFOLDS else f"manifold must be one of {', '.join(MANIFOLDS)}"),
    "seed": (_int, lambda v: None if 0 <= v < 2**64 else "seed must be an unsigned 64-bit integer"),
    "threads": (_int, lambda v: None if v >= 1 else "threads must be at least 1"),
    "lambda_max": (_float, lambda v: None if v >= 0 else "lambda_max must be nonnegative"),
    "p": (_float, lambda v: None if v >= 1 else "p must be at least 1"),
    "R": (_floats, lambda v: None if v and min(v) >= 1 else "R values must be at least 1"),
    "k": (_int, lambda v: None if v >= 1 else "k must be at least 1"),
    "trials": (_int, lambda v: None if v >= 1 else "trials must be at least 1"),
    "deltas": (_floats, lambda v: None if v and min(v) > 0 else "deltas must be positive"),
    "eta": (_float, lambda v: None if 0 <= v < 1 else "eta must lie in [0, 1)"),
    "n_samples": (_int, lambda v: None if v >= 10_000 else "n_samples must be at least 10000"),
    "window": (_str, lambda v: None if v in ("bump", "fejer") else "window must be bump or fejer"),
    "band_factor": (_float, lambda v: None if v >= 2 else "band_factor must be at least 2"),
    "function": (_str, lambda v: None if v in ("measure", "random", "lines") else "function must be measure, random or lines"),
    "lines": (_floats, lambda v: None if v and all(x >= 0 and x == int(x) for x in v) else "lines must be line indices"),
    "n_lines": (_int, lambda v: None if v >= 1 else "n_lines must be at least 1"),
    "instances": (_int, lambda v: None if v >= 0 else "instances must be nonnegative"),
    "tolerance": (_float, lambda v: None if v > 0 else "tolerance must be positive"),
    "b_bound": (_float, lambda v: None if v > 0 else "b_bound must be positive"),
    "fit_from": (_float, lambda v: None if 0 < v < 1 else "fit_from must lie in (0, 1)"),
    "sup_bound": (_float, lambda v: None if v > 0 else "sup_bound must be positive"),
}

MEASURE_KEYS = {
    "kind": (_str, lambda v: None if v in MEASURE_KINDS else f"kind must be one of {', '.join(MEASURE_KINDS)}"),
    "k": (_int, lambda v: None if v >= 0 else "k must be nonnegative"),
    "start": (_floats, None),
    "end": (_floats, None),
    "offset": (_floats, None),
    "scale": (_float, lambda v: None if v > 0 else "scale must be positive"),
    "theta0": (_float, lambda v: None if 0 < v < math.pi else "theta0 must lie in (0, pi)"),
    "points": (_points, lambda v: None if v else "points must be nonempty"),
    "weights": (_floats, None),
    "level": (_int, lambda v: None if 0 <= v <= 12 else "level must lie in [0, 12]"),
    "ratio": (_float, lambda v: None if 0 < v < 0.5 else "ratio must lie in (0, 1/2)"),
    "side": (_float, lambda v: None if v > 0 else "side must be positive"),
    "density": (_str, lambda v: None if v in ("uniform", "cosine") else "density must be uniform or cosine"),
    "density_amplitude": (_float, lambda v: None if 0 <= v < 1 else "density_amplitude must lie in [0, 1)"),
    "density_frequency": (_int, None),
}

SECTIONS = {"run": RUN_KEYS, "measure": MEASURE_KEYS}

NEEDS_MEASURE = {"profile", "stability", "endpoint", "kuznecov", "volume"}
REQUIRED = {
    "spectrum": ("manifold", "lambda_max"),
    "profile": ("manifold", "lambda_max"),
    "fr": ("manifold", "lambda_max"),
    "approx": ("manifold", "lambda_max", "k", "trials"),
    "stability": ("manifold", "p", "R"),
    "endpoint": ("manifold", "R"),
    "uncertainty": ("manifold", "R"),
    "kuznecov": ("manifold", "lambda_max"),
    "volume": ("manifold", "deltas"),
}

# canonical order of run keys in the echo
_RUN_ORDER = tuple(RUN_KEYS)


@dataclass
class ExperimentConfig:
    command: str
    manifold: str
    seed: int = DEFAULT_SEED
    threads: int = field(default=1, compare=False)  # scheduling only, never changes results
    params: dict = field(default_factory=dict)  # remaining run keys
    measure: dict = field(default_factory=dict)

    def get(self, key, default=None):
        return self.params.get(key, default)

    def measure_desc(self):
        if not self.measure:
            return None
        desc = {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.measure.items()}
        if "points" in desc:
            desc["points"] = [list(p) for p in self.measure["points"]]
        desc["manifold"] = self.manifold
        return desc

    def to_text(self, with_threads=True) -> str:
        """Canonical config text; parsing it gives back an equal config."""
        lines = [f"command = {self.command}", f"manifold = {self.manifold}", f"seed = {self.seed}"]
        if with_threads:
            lines.append(f"threads = {self.threads}")
        for key in _RUN_ORDER:
            if key in self.params:
                lines.append(f"{key} = {_fmt(self.params[key])}")
        if self.measure:
            lines.append("")
            lines.append("[measure]")
            for key in MEASURE_KEYS:
                if key in self.measure:
                    lines.append(f"{key} = {_fmt(self.measure[key])}")
        return "\n".join(lines) + "\n"

    def to_json(self):
        return {
            "command": self.command,
            "manifold": self.manifold,
            "seed": self.seed,
            "params": {k: _jsonable(v) for k, v in sorted(self.params.items())},
            "measure": {k: _jsonable(v) for k, v in sorted(self.measure.items())},
        }


def _jsonable(v):
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    return v


def _fmt(v):
    if isinstance(v, tuple):
        if v and isinstance(v[0], tuple):
            return "; ".join(", ".join(repr(float(x)) for x in p) for p in v)
        return ", ".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse_config(text: str, command=None) -> ExperimentConfig:
    """Parse and validate; raises ConfigError listing every violation."""
    errors = []
    values = {"run": {}, "measure": {}}
    where = {}
    section = "run"
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in SECTIONS:
                errors.append(f"line {no}: unknown section [{section}]")
            continue
        if "=" not in line:
            errors.append(f"line {no}: expected 'key = value', got {raw.strip()!r}")
            continue
        key, val = (s.strip() for s in line.split("=", 1))
        if section not in SECTIONS:
            continue
        allowed = SECTIONS[section]
        if key not in allowed:
            errors.append(f"line {no}: unknown key {key!r} in [{section}]")
            continue
        if key in values[section]:
            errors.append(f"line {no}: duplicate key {key!r}")
            continue
        parser, check = allowed[key]
        try:
            v = parser(val)
        except ValueError:
            errors.append(f"line {no}: {key}: cannot parse {val!r}")
            continue
        msg = check(v) if check else None
        if msg:
            errors.append(f"line {no}: {msg}")
            continue
        values[section][key] = v
        where[(section, key)] = no

    run, meas = values["run"], values["measure"]
    if command is not None:
        if "command" in run and run["command"] != command:
            errors.append(f"line {where[('run', 'command')]}: command {run['command']!r} conflicts with {command!r}")
        run["command"] = command
    cmd = run.get("command")
    if cmd is None:
        errors.append("missing required key 'command'")
    elif cmd in REQUIRED:
        for key in REQUIRED[cmd]:
            if key not in run:
                errors.append(f"missing required key {key!r} for {cmd}")
        if cmd in NEEDS_MEASURE and not meas:
            errors.append(f"missing [measure] section for {cmd}")
        if cmd == "uncertainty" and not meas and run.get("function", "random") != "random":
            errors.append("uncertainty needs a [measure] section unless function = random")
        if cmd in ("fr", "approx") and run.get("function", "measure" if meas else "random") == "measure" and not meas:
            errors.append(f"{cmd} with function = measure needs a [measure] section")
        if cmd == "stability" and "p" in run and not run["p"] > 2:
            errors.append(f"line {where[('run', 'p')]}: p must exceed 2")
        if cmd == "kuznecov" and run.get("manifold") not in (None, "sphere2"):
            errors.append(f"line {where[('run', 'manifold')]}: kuznecov runs on sphere2")
        if run.get("function") == "lines" and "lines" not in run:
            errors.append("function = lines needs a 'lines' key")

    man = run.get("manifold")
    if meas:
        if "kind" not in meas:
            errors.append("missing required key 'kind' in [measure]")
        d = 2 if man == "sphere2" else int(man[5:]) if man else None
        if d is not None and "k" in meas and meas["k"] >= d:
            errors.append(f"line {where[('measure', 'k')]}: support not thin: k={meas['k']} >= d={d}")
        kind = meas.get("kind")
        sphere_only = ("equator", "latitude")
        if man and kind in sphere_only and man != "sphere2":
            errors.append(f"line {where[('measure', 'kind')]}: {kind} lives on sphere2")
        if man and kind in ("subtorus", "segment", "moment-curve", "product-cantor") and man == "sphere2":
            errors.append(f"line {where[('measure', 'kind')]}: {kind} lives on a torus")
        if kind == "product-cantor" and man not in (None, "torus2"):
            errors.append(f"line {where[('measure', 'kind')]}: product-cantor lives on torus2")
        if kind == "atom-set" and "points" not in meas:
            errors.append("atom-set needs 'points'")
        if d is not None:
            pd = d
            for key in ("start", "end"):
                if key in meas and len(meas[key]) != pd:
                    errors.append(f"line {where[('measure', key)]}: {key} needs {pd} coordinates")
            if "points" in meas and any(len(p) != pd for p in meas["points"]):
                errors.append(f"line {where[('measure', 'points')]}: points need {pd} coordinates each")
            if "weights" in meas and "points" in meas and len(meas["weights"]) != len(meas["points"]):
                errors.append(f"line {where[('measure', 'weights')]}: one weight per point")
    if errors:
        def line_of(msg):
            return int(msg.split(":")[0][5:]) if msg.startswith("line ") else 1 << 30

        raise ConfigError(sorted(errors, key=line_of))
    params = {k: v for k, v in run.items() if k not in ("command", "manifold", "seed", "threads")}
    return ExperimentConfig(cmd, man, run.get("seed", DEFAULT_SEED), run.get("threads", 1), params, dict(meas))


def load_config(path, command=None) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), command)


def config_digest(cfg: ExperimentConfig) -> str:
    return json.dumps(cfg.to_json(), sort_keys=True)
