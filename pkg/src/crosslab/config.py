"""Experiment configuration: flat ``key = value`` text with dotted keys.

    # comment
    system.space = torus            # torus | periodic | point
    system.theta = 0.6180339887498949
    kernel.preset = almost_mathieu
    kernel.lambda = 2.0
    computation = trace-check
    numeric.x_grid = 64
    output = results/am2

Values are Python literals (numbers, lists, tuples, quoted strings); a bare
word such as ``torus`` or a path is read as a string.  One experiment per file.
"""
from __future__ import annotations

import ast
import hashlib
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .algebra import Kernel
from .dynsys import GOLDEN, DynamicalSystem
from .errors import ConfigError, UnsupportedSpace
from .presets import CATALOG, build

COMPUTATIONS = ("trace-check", "ids", "bands", "support-check", "duality-check", "aubry-probe", "shubin")
SPACES = ("torus", "periodic", "point")

# name -> (default, kind); kind drives validation
NUMERIC = {
    "box_radius": (None, "int+"),
    "x_grid": (64, "int+"),
    "t_grid": (128, "int+"),
    "mode_cutoff": (12, "int+"),
    "energy_grid": (512, "int+"),
    "zone_resolution": (512, "int+"),
    "weight_radius": (8, "int0"),
    "shubin_radii": ((10, 20, 40, 80, 160, 320, 640), "ints+"),
    "x": (0.0, "point"),
    "x_samples": ((0.0, 0.25, 0.5, 0.75), "points"),
    "t_samples": ((0.1, 0.35, 0.6, 0.85), "points"),
    "n": (500, "int+"),
    "M": (500, "int+"),
    "ritz_M": (200, "int+"),
    "random_kernels": (100, "int0"),
    "random_radius": (3, "int0"),
    "random_degree": (3, "int0"),
    "interval": (None, "interval"),
    "pad": (None, "int+"),
    "max_edge_states": (4, "int0"),
    "ids_tolerance": (0.02, "float+"),
}

KEYS = {"system.space", "system.rank", "system.theta", "system.periods", "kernel.preset", "kernel.terms",
        "kernel.lambda", "kernel.potential", "computation", "output"} | {f"numeric.{k}" for k in NUMERIC}

_BARE = re.compile(r"^[A-Za-z_./~\-][\w./~\-]*$")


def _parse_value(text: str, key: str, line: int):
    if text == "":
        raise ConfigError("missing value", key, line)
    low = text.lower()
    if low in ("inf", "+inf", "-inf"):
        return float(low)
    for candidate in (text, re.sub(r"\binf\b", "1e999", text)):
        try:
            return ast.literal_eval(candidate)
        except (ValueError, SyntaxError):
            pass
    if _BARE.match(text):
        return text
    raise ConfigError(f"cannot parse value {text!r}", key, line)


def parse_text(text: str) -> tuple[dict, dict]:
    """Return ({key: value}, {key: line number})."""
    values, lines = {}, {}
    for no, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip() if not raw.lstrip().startswith("#") else ""
        if not body:
            continue
        if "=" not in body:
            raise ConfigError("expected 'key = value'", None, no)
        key, val = (s.strip() for s in body.split("=", 1))
        if not re.match(r"^[A-Za-z_][\w]*(\.[A-Za-z_][\w]*)*$", key):
            raise ConfigError(f"malformed key {key!r}", key, no)
        if key not in KEYS:
            raise ConfigError("unknown key", key, no)
        if key in values:
            raise ConfigError(f"duplicate key (first set on line {lines[key]})", key, no)
        values[key] = _parse_value(val, key, no)
        lines[key] = no
    return values, lines


@dataclass
class ExperimentConfig:
    system: DynamicalSystem
    kernel_spec: dict
    computation: str
    numeric: dict
    output: str | None
    text: str = ""
    raw: dict = field(default_factory=dict)

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()

    def build_kernel(self) -> Kernel:
        spec = self.kernel_spec
        if "terms" in spec:
            terms = {}
            for t, k, amp in spec["terms"]:
                k = tuple(np.atleast_1d(k).tolist()) if self.system.dim else ()
                terms[(tuple(np.atleast_1d(t).tolist()), k)] = amp
            return Kernel.from_terms(self.system, terms)
        params = {k: v for k, v in spec.items() if k != "preset"}
        return build(spec["preset"], self.system, **params)

    def echo(self) -> dict:
        return {"computation": self.computation, "system": self.system.describe(),
                "kernel": self.kernel_spec, "numeric": self.numeric, "output": self.output}


def _check_numeric(name, value, kind, line):
    key = f"numeric.{name}"

    def bad(msg):
        return ConfigError(msg, key, line)

    def is_int(v):
        return isinstance(v, int) and not isinstance(v, bool)

    if kind == "int+" and not (is_int(value) and value > 0):
        raise bad(f"must be a positive integer, got {value!r}")
    if kind == "int0" and not (is_int(value) and value >= 0):
        raise bad(f"must be a nonnegative integer, got {value!r}")
    if kind == "float+" and not (isinstance(value, (int, float)) and not isinstance(value, bool)
                                 and 0 < value < math.inf):
        raise bad(f"must be a positive finite number, got {value!r}")
    if kind == "ints+":
        value = (value,) if is_int(value) else value
        if not (isinstance(value, (list, tuple)) and value and all(is_int(v) and v > 0 for v in value)):
            raise bad(f"must be a list of positive integers, got {value!r}")
        return tuple(value)
    if kind == "point":
        arr = np.atleast_1d(np.asarray(value, dtype=float)) if _numeric_like(value) else None
        if arr is None or arr.ndim != 1:
            raise bad(f"must be a number or a list of numbers, got {value!r}")
        return value if np.ndim(value) == 0 else tuple(value)
    if kind == "points":
        if not isinstance(value, (list, tuple)) or not value or not all(_numeric_like(v) for v in value):
            raise bad(f"must be a non-empty list of points, got {value!r}")
        return tuple(value)
    if kind == "interval":
        if not (isinstance(value, (list, tuple)) and len(value) == 2 and all(_numeric_like(v) for v in value)
                and value[0] < value[1]):
            raise bad(f"must be (lo, hi) with lo < hi, got {value!r}")
        return (float(value[0]), float(value[1]))
    return value


def _numeric_like(v) -> bool:
    try:
        arr = np.asarray(v, dtype=float)
    except (TypeError, ValueError):
        return False
    return arr.ndim <= 1 and bool(np.all(np.isfinite(arr) | np.isinf(arr)))


def _system(values, lines) -> DynamicalSystem:
    space = values.get("system.space", "torus")
    line = lines.get("system.space")
    if space not in SPACES:
        raise ConfigError(f"unknown space {space!r}; expected one of {', '.join(SPACES)}", "system.space", line)
    rank = values.get("system.rank", 1)
    if not isinstance(rank, int) or isinstance(rank, bool) or rank < 1:
        raise ConfigError(f"rank must be a positive integer, got {rank!r}", "system.rank", lines.get("system.rank"))
    if space == "point":
        return DynamicalSystem.point(rank)
    if space == "periodic":
        if "system.periods" not in values:
            pot = values.get("kernel.potential")
            if pot is None:
                raise ConfigError("periodic systems need system.periods (or kernel.potential)", "system.periods", None)
            periods = np.shape(pot) or (1,)
        else:
            periods = values["system.periods"]
        per = np.atleast_1d(periods)
        if per.dtype.kind not in "iu" or np.any(per < 1) or len(per) != rank:
            raise ConfigError(f"periods must be {rank} positive integers, got {periods!r}", "system.periods",
                              lines.get("system.periods"))
        return DynamicalSystem.periodic(per.tolist())
    theta = values.get("system.theta", GOLDEN)
    try:
        return DynamicalSystem.rotation(theta, rank)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc), "system.theta", lines.get("system.theta")) from exc


def load(text: str) -> ExperimentConfig:
    values, lines = parse_text(text)
    if "computation" not in values:
        raise ConfigError("missing required key", "computation", None)
    comp = values["computation"]
    if comp not in COMPUTATIONS:
        raise ConfigError(f"unknown computation {comp!r}; expected one of {', '.join(COMPUTATIONS)}",
                          "computation", lines["computation"])
    system = _system(values, lines)

    if "kernel.terms" in values and "kernel.preset" in values:
        raise ConfigError("give either kernel.preset or kernel.terms, not both", "kernel.terms", lines["kernel.terms"])
    if "kernel.terms" in values:
        terms = values["kernel.terms"]
        ok = isinstance(terms, (list, tuple)) and terms and all(isinstance(t, (list, tuple)) and len(t) == 3 for t in terms)
        if not ok:
            raise ConfigError("kernel.terms must be a list of (t, mode, amplitude) triples", "kernel.terms",
                              lines["kernel.terms"])
        spec = {"terms": [list(t) for t in terms]}
    else:
        preset = values.get("kernel.preset")
        if preset is None:
            raise ConfigError("missing required key", "kernel.preset", None)
        if preset not in CATALOG:
            raise ConfigError(f"unknown preset {preset!r}; known: {', '.join(CATALOG)}", "kernel.preset",
                              lines["kernel.preset"])
        spec = {"preset": preset}
        for p in ("lambda", "potential"):
            if f"kernel.{p}" in values:
                spec[p] = values[f"kernel.{p}"]

    numeric = {}
    for name, (default, kind) in NUMERIC.items():
        key = f"numeric.{name}"
        if key in values:
            numeric[name] = _check_numeric(name, values[key], kind, lines[key])
        else:
            numeric[name] = default

    output = values.get("output")
    if output is not None and not isinstance(output, str):
        raise ConfigError("output must be a path", "output", lines["output"])
    cfg = ExperimentConfig(system, spec, comp, numeric, output, text, values)
    try:
        kern = cfg.build_kernel()
    except KeyError as exc:
        raise ConfigError(str(exc.args[0]), "kernel.preset", lines.get("kernel.preset")) from exc
    except (UnsupportedSpace, ValueError, TypeError) as exc:
        field_ = "kernel.terms" if "terms" in spec else "kernel.preset"
        raise ConfigError(f"kernel does not fit the system: {exc}", field_, lines.get(field_)) from exc
    if comp in ("ids", "bands", "support-check", "aubry-probe") and not kern.is_selfadjoint():
        raise ConfigError(f"{comp} needs a selfadjoint kernel", "kernel", None)
    if comp in ("bands", "support-check") and not system.space.finite:
        raise ConfigError(f"{comp} needs a finite space (system.space = periodic or point)", "system.space",
                          lines.get("system.space"))
    if comp in ("duality-check",) and system.space.finite:
        raise ConfigError("duality-check needs a torus", "system.space", lines.get("system.space"))
    if comp == "aubry-probe":
        if spec.get("preset") != "almost_mathieu":
            raise ConfigError("aubry-probe needs kernel.preset = almost_mathieu", "kernel.preset",
                              lines.get("kernel.preset"))
        if not float(spec.get("lambda", 0)) > 0:
            raise ConfigError("aubry-probe needs kernel.lambda > 0", "kernel.lambda", lines.get("kernel.lambda"))
    return cfg


def load_file(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", "--config", None) from exc
    return load(text)
