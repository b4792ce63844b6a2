"""Experiment configuration files.

The format is line oriented::

    # comment
    experiment = gamma_energy
    seed = 0

    [domain]
    dim = 2
    h = 1/64

    [family]
    kind = VariablePower
    p = 2 + x1

Keys before the first section header belong to the top level. Unknown
sections and keys are rejected, and every error carries its line number.
Numbers may be written as plain arithmetic (``1/64``, ``-0.5``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .expr import ExpressionError, parse_expression

__all__ = ["ConfigError", "ExperimentConfig", "EXPERIMENTS", "parse_config", "load_config"]

EXPERIMENTS = (
    "gamma_energy",
    "limit_convergence",
    "eps_sandwich",
    "subdomain_extremal",
    "inequality_fuzz",
    "poincare_jump",
    "structure_audit",
)

FAMILY_KINDS = ("ConstantPower", "VariablePower", "LogPower", "Piecewise")
SUBDOMAIN_KINDS = ("none", "disc", "rectangle")

# section -> key -> kind ("str", "int", "real", "reals", "ints", "expr")
SCHEMA = {
    "": {"experiment": "str", "seed": "int", "out": "str"},
    "domain": {"dim": "int", "h": "real", "n": "int", "lower": "real", "upper": "real",
               "subdomain": "str", "center": "reals", "radius": "real",
               "sub_lower": "reals", "sub_upper": "reals"},
    "family": {"kind": "str", "p": "expr", "outside_p": "real"},
    "boundary": {"preset": "str", "apex": "reals"},
    "sweep": {"p": "reals", "epsilon": "reals"},
    "fuzz": {"samples": "int", "dims": "ints", "exponents": "reals"},
    "poincare": {"trials": "int", "h_list": "reals", "delta": "real"},
}


class ConfigError(ValueError):
    """Malformed configuration; ``line`` is 1-based or ``None``."""

    def __init__(self, message, line=None, key=None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
        self.key = key


def _real(text, line, key):
    try:
        expr = parse_expression(text)
    except ExpressionError as exc:
        raise ConfigError(f"{key}: {exc}", line, key) from None
    if not expr.is_constant:
        raise ConfigError(f"{key}: expected a number, got {text!r}", line, key)
    return expr.constant_value()


def _convert(kind, text, line, key):
    if kind == "str":
        return text
    if kind == "int":
        if not re.fullmatch(r"[+-]?\d+", text):
            raise ConfigError(f"{key}: expected an integer, got {text!r}", line, key)
        return int(text)
    if kind == "real":
        return _real(text, line, key)
    if kind in ("reals", "ints"):
        parts = [t.strip() for t in text.split(",") if t.strip()]
        if not parts:
            raise ConfigError(f"{key}: empty list", line, key)
        if kind == "ints":
            return [_convert("int", t, line, key) for t in parts]
        return [_real(t, line, key) for t in parts]
    if kind == "expr":
        try:
            return parse_expression(text)
        except ExpressionError as exc:
            raise ConfigError(f"{key}: {exc}", line, key) from None
    raise AssertionError(kind)


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 0
    out: Optional[str] = None
    dim: int = 2
    n: Optional[int] = None
    h: Optional[float] = None
    lower: float = 0.0
    upper: float = 1.0
    subdomain: str = "none"
    center: Optional[list] = None
    radius: Optional[float] = None
    sub_lower: Optional[list] = None
    sub_upper: Optional[list] = None
    family: str = "ConstantPower"
    p_expr: Optional[object] = None
    outside_p: float = 3.0
    preset: str = "affine"
    apex: Optional[list] = None
    p_sweep: list = field(default_factory=lambda: [4.0, 8.0, 16.0, 32.0, 64.0])
    epsilons: list = field(default_factory=lambda: [0.1, 0.05, 0.025])
    samples: int = 100_000
    dims: list = field(default_factory=lambda: [2, 3])
    exponents: list = field(default_factory=lambda: [2.0, 4.0, 8.0])
    trials: int = 1000
    h_list: list = field(default_factory=lambda: [1 / 32, 1 / 64])
    delta: float = 0.25
    lines: dict = field(default_factory=dict, repr=False)

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of "
                              + ", ".join(EXPERIMENTS), self.lines.get("experiment"), "experiment")
        if self.dim not in (1, 2):
            raise ConfigError("dim must be 1 or 2", self.lines.get("dim"), "dim")
        if self.family not in FAMILY_KINDS:
            raise ConfigError(f"unknown family kind {self.family!r}", self.lines.get("kind"), "kind")
        if self.subdomain not in SUBDOMAIN_KINDS:
            raise ConfigError(f"unknown subdomain {self.subdomain!r}", self.lines.get("subdomain"), "subdomain")
        if any(b <= a for a, b in zip(self.p_sweep, self.p_sweep[1:])):
            raise ConfigError("p sweep must be strictly ascending", self.lines.get("p"), "p")
        if not self.upper > self.lower:
            raise ConfigError("upper must exceed lower", self.lines.get("upper"), "upper")
        if self.subdomain == "disc" and (self.center is None or self.radius is None):
            missing = "center" if self.center is None else "radius"
            raise ConfigError(f"missing key {missing!r} for a disc subdomain", None, missing)
        if self.subdomain == "rectangle" and (self.sub_lower is None or self.sub_upper is None):
            missing = "sub_lower" if self.sub_lower is None else "sub_upper"
            raise ConfigError(f"missing key {missing!r} for a rectangle subdomain", None, missing)
        if self.experiment == "subdomain_extremal" and self.subdomain == "none":
            raise ConfigError("missing key 'subdomain' for subdomain_extremal", None, "subdomain")
        if self.family in ("VariablePower", "Piecewise") and self.p_expr is None:
            raise ConfigError(f"missing key 'p' for family {self.family}", None, "p")
        from .presets import check_preset
        try:
            check_preset(self.preset)
        except ValueError as exc:
            raise ConfigError(str(exc), self.lines.get("preset"), "preset") from None
        return self


_FIELD = {("", "experiment"): "experiment", ("", "seed"): "seed", ("", "out"): "out",
          ("family", "kind"): "family", ("family", "p"): "p_expr",
          ("sweep", "p"): "p_sweep", ("sweep", "epsilon"): "epsilons"}


def parse_config(text):
    """Parse configuration text into a validated :class:`ExperimentConfig`."""
    section = ""
    seen = {}
    values = {}
    lines = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw.strip()!r}", lineno)
            section = line[1:-1].strip()
            if section not in SCHEMA or section == "":
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (t.strip() for t in line.split("=", 1))
        if key not in SCHEMA[section]:
            where = f"[{section}]" if section else "top level"
            raise ConfigError(f"unknown key {key!r} in {where}", lineno, key)
        if (section, key) in seen:
            raise ConfigError(f"duplicate key {key!r} (first on line {seen[section, key]})", lineno, key)
        if not value:
            raise ConfigError(f"empty value for {key!r}", lineno, key)
        seen[section, key] = lineno
        name = _FIELD.get((section, key), key)
        values[name] = _convert(SCHEMA[section][key], value, lineno, key)
        lines[key] = lineno
    if "experiment" not in values:
        raise ConfigError("missing key 'experiment'", None, "experiment")
    cfg = ExperimentConfig(**values)
    cfg.lines = lines
    return cfg.validate()


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
