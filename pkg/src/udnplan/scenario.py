"""Experiment parameters: definition, validation, config-file IO.

Densities are points per unit area of a normalized plane; only their ratios
carry meaning. Bandwidths are in MHz. Angles are written in degrees in
config files and on the command line, and exposed in radians on the
objects.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

log = logging.getLogger(__name__)


class ScenarioError(ValueError):
    """Base class for scenario problems."""


class ExponentOutOfRange(ScenarioError):
    pass


class RatioOutOfRange(ScenarioError):
    pass


class NegativeDensity(ScenarioError):
    pass


class InvalidParameter(ScenarioError):
    pass


class ParseError(ScenarioError):
    def __init__(self, message, line=None, key=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.message = message
        self.line = line
        self.key = key


class UnknownKey(ParseError):
    pass


@dataclass(frozen=True)
class RadioParams:
    alpha_mu: float = 4.58
    alpha_mm_out: float = 5.76
    alpha_mm_in: float = 2.0
    theta_deg: float = 10.0
    sigma2: float = 1.0

    @property
    def theta(self) -> float:
        """Main-lobe width in radians."""
        return math.radians(self.theta_deg)


@dataclass(frozen=True)
class Densities:
    lambda_mu: float = 1.0
    lambda_mm: float = 1.0
    lambda_u: float = 0.02
    lambda_g: float = 0.1
    radius_in: float = math.sqrt(0.02 / math.pi)

    @property
    def area_in(self) -> float:
        return math.pi * self.radius_in**2


@dataclass(frozen=True)
class BandPlan:
    w_mu_total: float = 20.0
    w_mm: float = 500.0
    t_min: float = 0.03


@dataclass(frozen=True)
class SimControl:
    window_side: float = 100.0
    trials: int = 10_000
    seed: int = 0
    ci_level: float = 0.95


@dataclass(frozen=True)
class Scenario:
    radio: RadioParams = field(default_factory=RadioParams)
    densities: Densities = field(default_factory=Densities)
    bands: BandPlan = field(default_factory=BandPlan)
    sim: SimControl = field(default_factory=SimControl)

    @property
    def area_in(self) -> float:
        return self.densities.area_in

    @property
    def p_outdoor(self) -> float:
        """Probability that a point lies outside every indoor disk."""
        return math.exp(-self.densities.lambda_g * self.densities.area_in)

    def with_overrides(self, **overrides) -> "Scenario":
        """Return a copy with flat ``key=value`` overrides applied.

        Values may be strings (parsed like config-file values) or numbers.
        ``theta`` is in degrees; ``area_in`` sets the disk radius.
        """
        groups = {name: {} for name in _GROUPS}
        for key, value in overrides.items():
            for k, v in _expand_key(key, value):
                groups[_KEY_GROUP[k]][k] = _coerce(k, v)
        return Scenario(
            **{
                name: replace(getattr(self, name), **groups[name])
                for name in _GROUPS
            }
        )

    def flat(self) -> dict:
        """Flat ``{config key: value}`` view, in config-file order."""
        out = {}
        for name in _GROUPS:
            for f in fields(getattr(self, name)):
                out[_FILE_KEY.get(f.name, f.name)] = getattr(getattr(self, name), f.name)
        return out

    def params_hash(self) -> str:
        return hashlib.sha256(dumps(self).encode()).hexdigest()[:12]


_GROUPS = ("radio", "densities", "bands", "sim")
_KEY_GROUP = {
    f.name: group
    for group, cls in zip(_GROUPS, (RadioParams, Densities, BandPlan, SimControl))
    for f in fields(cls)
}
_INT_KEYS = {"trials", "seed"}
# theta is stored in degrees but written as plain `theta` in files
_FILE_KEY = {"theta_deg": "theta"}
_FIELD_KEY = {v: k for k, v in _FILE_KEY.items()}
KEYS = tuple(_FILE_KEY.get(k, k) for k in _KEY_GROUP) + ("area_in",)


def _expand_key(key, value):
    key = key.strip()
    if key == "area_in":
        area = _coerce("area_in", value)
        if area < 0:
            raise NegativeDensity(f"area_in must be >= 0, got {area}")
        return [("radius_in", math.sqrt(area / math.pi))]
    key = _FIELD_KEY.get(key, key)
    if key not in _KEY_GROUP:
        raise UnknownKey(f"unknown key {key!r}; known keys: {', '.join(KEYS)}", key=key)
    return [(key, value)]


def _coerce(key, value):
    if isinstance(value, str):
        text = value.strip()
        try:
            if key in _INT_KEYS:
                return int(text, 0)
            return float(text)
        except ValueError:
            raise ParseError(f"cannot parse value {text!r}", key=key) from None
    if key in _INT_KEYS:
        if isinstance(value, float) and not value.is_integer():
            raise ParseError(f"expected an integer, got {value!r}", key=key)
        return int(value)
    return float(value)


def validate(scenario: Scenario) -> Scenario:
    """Check the modelling assumptions; return the scenario unchanged.

    Raises the first violation found; every violation is attached to it as
    ``.violations``. Soft conditions (regime not ultra-dense, overlapping
    indoor regions likely) are logged, not raised.
    """
    r, d, b, s = scenario.radio, scenario.densities, scenario.bands, scenario.sim
    problems: list[ScenarioError] = []

    for name in ("alpha_mu", "alpha_mm_out"):
        a = getattr(r, name)
        if not a > 2:
            problems.append(ExponentOutOfRange(f"{name} must be > 2, got {a}"))
    if r.alpha_mm_in != 2:
        problems.append(ExponentOutOfRange(f"alpha_mm_in is fixed at 2, got {r.alpha_mm_in}"))
    if not 0 < r.theta_deg <= 360:
        problems.append(InvalidParameter(f"theta must lie in (0, 360] degrees, got {r.theta_deg}"))
    if not r.sigma2 > 0:
        problems.append(InvalidParameter(f"sigma2 must be > 0, got {r.sigma2}"))

    for name in ("lambda_mu", "lambda_mm", "lambda_u", "lambda_g", "radius_in"):
        v = getattr(d, name)
        if not v >= 0:
            problems.append(NegativeDensity(f"{name} must be >= 0, got {v}"))

    if not b.w_mu_total >= 0:
        problems.append(InvalidParameter(f"w_mu_total must be >= 0, got {b.w_mu_total}"))
    if not b.w_mm >= 0:
        problems.append(InvalidParameter(f"w_mm must be >= 0, got {b.w_mm}"))
    if not 0 <= b.t_min <= 1:
        problems.append(RatioOutOfRange(f"t_min must lie in [0, 1], got {b.t_min}"))

    if not s.window_side > 0:
        problems.append(InvalidParameter(f"window_side must be > 0, got {s.window_side}"))
    if s.trials < 1:
        problems.append(InvalidParameter(f"trials must be >= 1, got {s.trials}"))
    if not 0 < s.ci_level < 1:
        problems.append(InvalidParameter(f"ci_level must lie in (0, 1), got {s.ci_level}"))

    if problems:
        first = problems[0]
        first.violations = problems
        raise first

    for name in ("lambda_mu", "lambda_mm"):
        if d.lambda_u > 0 and getattr(d, name) < 5 * d.lambda_u:
            log.info("%s/lambda_u = %.3g is not ultra-dense", name, getattr(d, name) / d.lambda_u)
    return scenario


def loads(text: str, base: Scenario | None = None) -> Scenario:
    """Parse ``key = value`` lines (``#`` starts a comment)."""
    overrides = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, value = (p.strip() for p in line.split("=", 1))
        if not key or not value:
            raise ParseError("empty key or value", line=lineno, key=key or None)
        if key in overrides:
            raise ParseError("duplicate key", line=lineno, key=key)
        try:
            for k, v in _expand_key(key, value):
                _coerce(k, v)
        except ParseError as exc:
            raise type(exc)(exc.message, line=lineno, key=key) from None
        overrides[key] = value
    scenario = (base or Scenario()).with_overrides(**overrides)
    return validate(scenario)


def load_scenario(path) -> Scenario:
    return loads(Path(path).read_text(encoding="utf-8"))


def dumps(scenario: Scenario) -> str:
    lines = []
    for key, value in scenario.flat().items():
        lines.append(f"{key} = {value!r}")
    return "\n".join(lines) + "\n"


def save_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(dumps(scenario), encoding="utf-8")


def parse_assignments(items) -> dict:
    """Turn ``["k=v", ...]`` (CLI ``--set``) into an override dict."""
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ParseError(f"expected key=value, got {item!r}")
        key, value = item.split("=", 1)
        _expand_key(key, value)
        out[key.strip()] = value.strip()
    return out
