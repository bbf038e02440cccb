"""Experiment configuration: a flat ``section.key = value`` text format.

Blank lines and ``#`` comments are ignored.  Lists are comma separated.
Every key must appear in :data:`SCHEMA`; unknown keys, malformed values and
unknown scenarios raise :class:`ConfigInvalidError` before any computation.
"""
from __future__ import annotations

import hashlib
from pathlib import Path

from .errors import ConfigInvalidError

SCENARIOS = ("dirichlet-1d", "dirichlet-2d", "random", "rotating-projection", "counterexample",
             "identity-battery")
SWEEP_SCENARIOS = ("dirichlet-1d", "dirichlet-2d", "random", "rotating-projection")


def _floats(text: str) -> list:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list:
    out = []
    for x in text.split(","):
        x = x.strip()
        if not x:
            continue
        if "^" in x:
            base, exp = x.split("^")
            out.append(int(base) ** int(exp))
        else:
            out.append(int(x))
    return out


def _strs(text: str) -> list:
    return [x.strip() for x in text.split(",") if x.strip()]


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int_or_auto(text: str):
    return "auto" if text.strip() == "auto" else int(text)


# key -> (parser, default as text)
SCHEMA = {
    "scenario": (str, None),
    "operator.dim": (int, "32"),
    "operator.rank": (int, "8"),
    "operator.seed": (int, "11"),
    "operator.lambda_max": (float, "5"),
    "operator.spectrum": (_floats, ""),
    "grid.points": (int, "200"),
    "grid.omega": (_floats, "0.25, 0.75"),
    "grid.box": (_floats, "0, 1"),
    "state.kind": (str, "random"),
    "state.seed": (int, "13"),
    "state.center": (_floats, "0.5"),
    "state.width": (float, "0.05"),
    "family.kind": (str, "constant"),
    "family.rate": (float, "1"),
    "family.speed": (float, "0"),
    "family.tau_max": (float, "1"),
    "family.seed": (int, "17"),
    "time.T": (float, "1"),
    "time.M": (_int_or_auto, "auto"),
    "sweep.n": (_ints, "64, 128, 256, 512, 1024, 2048, 4096, 8192"),
    "sweep.shapes": (_strs, "symmetric, left_projected, right_projected"),
    "sweep.sampling": (str, "constant"),
    "sweep.epsilon": (_ints, "1"),
    "weight.kind": (str, "uniform"),
    "weight.center": (float, "0.5"),
    "weight.width": (float, "0.05"),
    "probe.enabled": (_bool, "false"),
    "probe.t": (_floats, "0, 0.5, 1"),
    "probe.real_zeta": (_floats, "1"),
    "probe.tau_exponents": (_ints, "3, 4, 5, 6, 7, 8, 9, 10, 11, 12"),
    "counterexample.t": (float, "1"),
    "counterexample.nu_min": (float, "100"),
    "counterexample.nu_max": (float, "1e6"),
    "counterexample.samples_per_decade": (int, "50"),
    "counterexample.rel_tol": (float, "1e-12"),
    "battery.count": (int, "500"),
    "battery.seed": (int, "20240607"),
    "battery.n_max": (int, "256"),
    "battery.dim_min": (int, "4"),
    "battery.dim_max": (int, "32"),
    "tol.identity": (float, "1e-11"),
    "tol.chernoff": (float, "1e-8"),
    "tol.sine": (float, "1e-9"),
    "tol.invariant": (float, "1e-10"),
    "output.dir": (str, "results"),
}

# keys that do not change the numbers in a result row
UNHASHED = ("sweep.n", "output.dir")

CHOICES = {
    "state.kind": ("random", "gaussian"),
    "family.kind": ("constant", "rotating_rank_one", "sliding_window"),
    "sweep.sampling": ("constant", "tau_sampled", "time_scaled"),
    "weight.kind": ("uniform", "gaussian"),
}


def parse_text(text: str) -> dict:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigInvalidError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigInvalidError(f"line {lineno}: unknown key {key!r}")
        if key.count(".") > 1:
            raise ConfigInvalidError(f"line {lineno}: nesting beyond one level in {key!r}")
        if key in raw:
            raise ConfigInvalidError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


class ExperimentConfig:
    """Validated configuration; ``raw`` keeps the textual values for hashing."""

    def __init__(self, raw: dict):
        raw = dict(raw)
        if raw.get("scenario") not in SCENARIOS:
            raise ConfigInvalidError(f"scenario must be one of {SCENARIOS}, got {raw.get('scenario')!r}")
        self.raw = {k: (raw[k] if k in raw else d) for k, (_, d) in SCHEMA.items() if k in raw or d is not None}
        self.values = {}
        for key, text in self.raw.items():
            parser = SCHEMA[key][0]
            try:
                self.values[key] = parser(text)
            except (ValueError, TypeError) as exc:
                raise ConfigInvalidError(f"bad value for {key!r}: {text!r} ({exc})") from exc
            if key in CHOICES and self.values[key] not in CHOICES[key]:
                raise ConfigInvalidError(f"{key} must be one of {CHOICES[key]}, got {text!r}")
        self._check()

    def _check(self):
        v = self.values
        if any(n < 1 for n in v["sweep.n"]):
            raise ConfigInvalidError("sweep.n entries must be positive")
        if any(e not in (1, -1) for e in v["sweep.epsilon"]):
            raise ConfigInvalidError("sweep.epsilon entries must be +1 or -1")
        for s in v["sweep.shapes"]:
            if s not in ("symmetric", "left_projected", "right_projected"):
                raise ConfigInvalidError(f"unknown shape {s!r}")
        if v["time.T"] <= 0:
            raise ConfigInvalidError("time.T must be positive")
        if len(v["grid.omega"]) not in (2, 4) or len(v["grid.box"]) != 2:
            raise ConfigInvalidError("grid.omega needs 2 (1D) or 4 (2D) numbers, grid.box needs 2")

    @property
    def scenario(self) -> str:
        return self.values["scenario"]

    def __getitem__(self, key: str):
        return self.values[key]

    def with_overrides(self, **updates) -> "ExperimentConfig":
        raw = dict(self.raw)
        for key, value in updates.items():
            if value is not None:
                raw[key] = value
        return ExperimentConfig(raw)

    def canonical(self, include_unhashed: bool = False) -> str:
        keys = sorted(k for k in self.raw if include_unhashed or k not in UNHASHED)
        return "\n".join(f"{k} = {self.raw[k]}" for k in keys) + "\n"

    @property
    def config_hash(self) -> str:
        return config_hash(self.canonical())


def config_hash(canonical: str) -> str:
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


PRESETS = {
    "dirichlet-1d": """\
scenario = dirichlet-1d
grid.points = 200
grid.omega = 0.25, 0.75
grid.box = 0, 1
state.kind = gaussian
state.center = 0.5
state.width = 0.05
time.T = 0.02
time.M = auto
sweep.n = 2^6, 2^7, 2^8, 2^9, 2^10, 2^11, 2^12
sweep.shapes = symmetric
""",
    "dirichlet-2d": """\
scenario = dirichlet-2d
grid.points = 24
grid.omega = 0.25, 0.75, 0.25, 0.75
grid.box = 0, 1
state.kind = gaussian
state.center = 0.5, 0.5
state.width = 0.08
time.T = 0.01
time.M = 513
sweep.n = 2^4, 2^5, 2^6, 2^7, 2^8, 2^9, 2^10
sweep.shapes = symmetric
""",
    "random": """\
scenario = random
operator.dim = 32
operator.rank = 8
operator.seed = 11
operator.lambda_max = 5
state.kind = random
state.seed = 13
time.T = 1
time.M = auto
sweep.n = 2^6, 2^7, 2^8, 2^9, 2^10, 2^11, 2^12, 2^13
sweep.shapes = symmetric, left_projected, right_projected
probe.enabled = true
""",
    "rotating-projection": """\
scenario = rotating-projection
operator.dim = 16
operator.seed = 5
operator.lambda_max = 4
family.kind = rotating_rank_one
family.rate = 1
family.tau_max = 1
state.kind = random
state.seed = 6
time.T = 1
time.M = auto
sweep.n = 2^4, 2^5, 2^6, 2^7, 2^8, 2^9, 2^10
sweep.sampling = tau_sampled
""",
    "counterexample": """\
scenario = counterexample
counterexample.t = 1
counterexample.nu_min = 100
counterexample.nu_max = 1e6
counterexample.samples_per_decade = 50
""",
    "identity-battery": """\
scenario = identity-battery
battery.count = 500
battery.seed = 20240607
""",
}


def load_config(source: str) -> ExperimentConfig:
    """Read a config file, or a builtin preset when ``source`` names one."""
    path = Path(source)
    if path.is_file():
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigInvalidError(f"cannot read {source}: {exc}") from exc
    elif source in PRESETS:
        text = PRESETS[source]
    else:
        raise ConfigInvalidError(f"no config file or preset named {source!r}")
    return ExperimentConfig(parse_text(text))
