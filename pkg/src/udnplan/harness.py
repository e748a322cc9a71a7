"""Row builders and CSV output shared by ``estimate``, ``sweep`` and figures."""

from __future__ import annotations

import csv
import io
import logging
import math
import warnings
from dataclasses import dataclass, field

from . import __version__, analytic, mc, planner
from .analytic import DomainError
from .scenario import KEYS, Scenario, validate

log = logging.getLogger(__name__)

OUTPUTS = ("mc", "analytic", "planner")
# trial count and seed are echoed with the other scenario keys
MC_COLUMNS = ["mean", "stderr", "ci_low", "ci_high", "zero_rate"]
PLANNER_COLUMNS = ["gamma_mu", "gamma_mm", "w_ul", "w_dl", "feasible", "slack", "r_dl", "r_ul"]


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    param: str
    grid: tuple
    overrides: dict = field(default_factory=dict)
    outputs: tuple = ("mc", "analytic")
    regime: str = "mu_dl"

    def __post_init__(self):
        if self.param not in KEYS:
            raise UsageError(f"unknown sweep parameter {self.param!r}")
        if len(self.grid) == 0:
            raise UsageError("sweep grid is empty")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise UsageError("sweep grid must be strictly increasing")
        bad = [o for o in self.outputs if o not in OUTPUTS]
        if bad or not self.outputs:
            raise UsageError(f"outputs must be a non-empty subset of {OUTPUTS}, got {self.outputs}")
        if self.regime not in mc.REGIMES:
            raise UsageError(f"unknown regime {self.regime!r}")


def fmt(v) -> str:
    """Exact, locale-free text for CSV cells."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def columns(outputs) -> list:
    cols = ["regime", "params_hash"]
    if "mc" in outputs:
        cols += MC_COLUMNS
    if "analytic" in outputs:
        cols.append("bound")
    if "mc" in outputs and "analytic" in outputs:
        cols.append("ratio")
    if "planner" in outputs:
        cols += PLANNER_COLUMNS
    return cols + list(KEYS)


def point_row(regime, scenario: Scenario, outputs, workers=1, crn=False, form="prop2") -> dict:
    """One CSV row (as a dict) for ``scenario``."""
    validate(scenario)
    row = {"regime": regime, "params_hash": scenario.params_hash()}
    est = None
    if "mc" in outputs:
        est = mc.estimate(regime, scenario, workers=workers, crn=crn)
        row.update(mean=est.mean, stderr=est.stderr, ci_low=est.ci_low, ci_high=est.ci_high,
                   zero_rate=est.zero_rate)
    if "analytic" in outputs:
        try:
            bound = analytic.bound_for(regime, scenario, form).value
        except DomainError as exc:
            log.warning("analytic: %s", exc)
            bound = math.nan
        row["bound"] = bound
        if est is not None:
            row["ratio"] = bound / est.mean if est.mean > 0 else math.nan
    if "planner" in outputs:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", analytic.UltraDenseWarning)
            g_mu, g_mm = planner.gamma_pair(scenario, form)
        b = scenario.bands
        alloc = planner.allocate(b.w_mu_total, b.w_mm, b.t_min, g_mu.value, g_mm.value)
        pair = planner.rates(alloc, b.w_mm, g_mu.value, g_mm.value)
        row.update(gamma_mu=g_mu.value, gamma_mm=g_mm.value, w_ul=alloc.w_ul, w_dl=alloc.w_dl,
                   feasible=alloc.feasible, slack=alloc.slack, r_dl=pair.r_dl, r_ul=pair.r_ul)
    row.update(scenario.flat(), area_in=scenario.area_in)
    return row


def run_sweep(spec: SweepSpec, base: Scenario, workers=1, crn=False) -> list:
    rows = []
    for v in spec.grid:
        sc = base.with_overrides(**spec.overrides, **{spec.param: v})
        rows.append(point_row(spec.regime, sc, spec.outputs, workers=workers, crn=crn))
    return rows


def write_csv(fh, cols, rows, comments=()):
    """RFC 4180 CSV preceded by ``#`` provenance lines."""
    fh.write(f"# udnplan {__version__}\r\n")
    for c in comments:
        fh.write(f"# {c}\r\n")
    w = csv.writer(fh, lineterminator="\r\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([fmt(r.get(c)) for c in cols])


def csv_text(cols, rows, comments=()) -> str:
    buf = io.StringIO()
    write_csv(buf, cols, rows, comments)
    return buf.getvalue()
