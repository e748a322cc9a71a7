"""Figure pipelines fig2..fig7: each writes an authoritative CSV and an SVG view.

Every figure starts from the default scenario, applies its pinned
parameters, then user overrides. The swept quantity (and, where a figure
draws several curves, the curve parameter) is set by the pipeline itself.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, analytic, mc, planner
from .analytic import DomainError, UltraDenseWarning
from .harness import csv_text, fmt
from .scenario import Scenario, validate
from .svg import Plot, Series, render

FIGURES = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig7")

_COMMON = dict(lambda_u=0.02, alpha_mu=4.58, alpha_mm_out=5.76, lambda_g=0.1, theta=10.0,
               w_mu_total=20.0, w_mm=500.0, area_in=0.02)

# sigma2 = 1e-9 makes the mu and outdoor mmWave links interference-limited,
# which is the regime their bounds describe
PINNED = {
    "fig2": dict(_COMMON, alpha_mu=4.0, sigma2=1e-9),
    "fig3": dict(_COMMON, sigma2=1e-9),
    "fig4": dict(_COMMON, sigma2=1.0, area_in=50.0, lambda_g=0.002),
    "fig5": dict(_COMMON, sigma2=1.0, t_min=0.03),
    "fig6": dict(_COMMON, sigma2=1.0, t_min=0.1, lambda_mu=100.0),
    "fig7": dict(_COMMON, sigma2=1.0, t_min=0.04),
}

# smallest round n with CI half-width < 2 % of the mean at the densest point
FIGURE_TRIALS = {"fig2": 2200, "fig3": 500, "fig4": 4600}

FIG2_ALPHAS = (3.0, 4.0, 6.0)
FIG2_LAMBDA_MU = (0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0)
FIG3_AREAS = (0.02, 0.2)
FIG3_LAMBDA_MM = (0.04, 0.1, 0.2, 0.4, 1.0, 2.0)
FIG4_LAMBDA_MM = (0.02, 0.04, 0.1, 0.2, 0.4, 1.0, 2.0)
GRID_RATIO = (1.0, 500.0)
GRID_POINTS = 25
FIG5_MU_PER_MM = 4.0
FIG6_AREAS = (0.02, 0.2)
FIG6_SCAN = (0.02, 0.1, 1.0, 10.0, 100.0, 1000.0)
FIG6_TARGET = 1000.0 * analytic.NATS_PER_BIT  # 1 Gbit/s in Mnats/s
FIG7_BANDWIDTHS = (20.0, 30.0)
FIG7_LAMBDA_MM = (10.0, 1e4)
FIG7_POINTS = 31


@dataclass(frozen=True)
class FigureArtifact:
    figure_id: str
    csv_path: Path
    svg_path: Path
    scenario: Scenario
    version: str
    seed: int
    summary: dict = field(default_factory=dict)
    extra_csv: tuple = ()


def _grid(lambda_u, lo=GRID_RATIO[0], hi=GRID_RATIO[1], n=GRID_POINTS):
    return [float(v) for v in np.geomspace(lo * lambda_u, hi * lambda_u, n)]


def _mc_bound_rows(regime, sc, curve_key, curve_vals, x_key, xs, workers):
    rows = []
    for c in curve_vals:
        for x in xs:
            s = sc.with_overrides(**{curve_key: c, x_key: x})
            est = mc.estimate(regime, s, workers=workers)
            try:
                bound = analytic.bound_for(regime, s).value
            except DomainError:
                bound = math.nan
            rows.append({curve_key: c, x_key: x, "mean": est.mean, "stderr": est.stderr,
                         "ci_low": est.ci_low, "ci_high": est.ci_high, "zero_rate": est.zero_rate,
                         "bound": bound, "ratio": bound / est.mean if est.mean > 0 else math.nan})
    return rows


def _mc_bound_plot(rows, curve_key, curve_label, x_key, title, xlabel):
    plot = Plot(title, xlabel, "spectral efficiency (nats/s/Hz)", logx=True)
    for c in dict.fromkeys(r[curve_key] for r in rows):
        sub = [r for r in rows if r[curve_key] == c]
        xs = [r[x_key] for r in sub]
        plot.series.append(Series(f"bound, {curve_label}={c:g}", xs, [r["bound"] for r in sub]))
        plot.series.append(Series(f"MC, {curve_label}={c:g}", xs, [r["mean"] for r in sub], markers=True))
    return plot


MC_COLS = ["mean", "stderr", "ci_low", "ci_high", "zero_rate", "bound", "ratio"]


def _fig2(sc, workers):
    rows = _mc_bound_rows("mu_dl", sc, "alpha_mu", FIG2_ALPHAS, "lambda_mu", FIG2_LAMBDA_MU, workers)
    summary = {f"ratio[alpha_mu=4,lambda_mu={r['lambda_mu']:g}]": r["ratio"]
               for r in rows if r["alpha_mu"] == 4.0 and r["lambda_mu"] in (0.1, 0.2, 1.0)}
    plot = _mc_bound_plot(rows, "alpha_mu", "alpha", "lambda_mu",
                          "μWave spectral efficiency", "μWave BS density λμ")
    return ["alpha_mu", "lambda_mu"] + MC_COLS, rows, plot, summary


def _fig3(sc, workers):
    rows = _mc_bound_rows("mm_out", sc, "area_in", FIG3_AREAS, "lambda_mm", FIG3_LAMBDA_MM, workers)
    plot = _mc_bound_plot(rows, "area_in", "S", "lambda_mm",
                          "outdoor mmWave spectral efficiency", "mmWave BS density λm")
    return ["area_in", "lambda_mm"] + MC_COLS, rows, plot, {}


def _fig4(sc, workers):
    rows = _mc_bound_rows("mm_in", sc, "alpha_mm_in", (sc.radio.alpha_mm_in,), "lambda_mm",
                          FIG4_LAMBDA_MM, workers)
    plot = _mc_bound_plot(rows, "alpha_mm_in", "alpha", "lambda_mm",
                          "indoor mmWave spectral efficiency", "mmWave BS density λm")
    return ["alpha_mm_in", "lambda_mm"] + MC_COLS, rows, plot, {}


def _fig5(sc, workers):
    b, d, r = sc.bands, sc.densities, sc.radio
    rows = []
    for lam in _grid(d.lambda_u):
        s = sc.with_overrides(lambda_mm=lam, lambda_mu=FIG5_MU_PER_MM * lam)
        g_mu, g_mm = planner.gamma_pair(s)
        a = planner.allocate(b.w_mu_total, b.w_mm, b.t_min, g_mu.value, g_mm.value)
        rows.append(dict(lambda_mm=lam, lambda_mu=FIG5_MU_PER_MM * lam, gamma_mu=g_mu.value,
                         gamma_mm=g_mm.value, w_ul=a.w_ul, w_dl=a.w_dl, feasible=a.feasible,
                         slack=a.slack))
    limit = b.t_min / (1 + b.t_min) * (
        b.w_mu_total + b.w_mm * ((r.alpha_mm_out - 2) * sc.p_outdoor + 2) / r.alpha_mu)
    summary = {"mu_per_mm": FIG5_MU_PER_MM, "w_ul_limit": limit, "w_ul_at_grid_end": rows[-1]["w_ul"],
               "w_ul_over_w_at_grid_end": rows[-1]["w_ul"] / b.w_mu_total}
    xs = [x["lambda_mm"] for x in rows]
    plot = Plot("μWave bandwidth split", "mmWave BS density λm", "bandwidth (MHz)", logx=True, series=[
        Series("uplink", xs, [x["w_ul"] for x in rows]),
        Series("downlink", xs, [x["w_dl"] for x in rows]),
    ])
    cols = ["lambda_mm", "lambda_mu", "gamma_mu", "gamma_mm", "w_ul", "w_dl", "feasible", "slack"]
    return cols, rows, plot, summary


def _rate_ratio(sc, area):
    s = sc.with_overrides(area_in=area)
    try:
        return planner.lambda_mm_for_rate(s, FIG6_TARGET, constrained=s.bands.t_min > 0) / s.densities.lambda_u
    except (planner.Infeasible, planner.NoSolution):
        return math.nan


def _fig6(sc, workers):
    b, d = sc.bands, sc.densities
    constrained = b.t_min > 0
    rows = []
    for area in FIG6_AREAS:
        for lam in _grid(d.lambda_u):
            if lam <= area:
                continue
            s = sc.with_overrides(area_in=area, lambda_mm=lam)
            g_mu, g_mm = planner.gamma_pair(s, discount=True)
            row = dict(area_in=area, lambda_mm=lam,
                       r_dl_unconstrained=b.w_mu_total * g_mu.value + b.w_mm * g_mm.value)
            if constrained:
                a = planner.allocate(b.w_mu_total, b.w_mm, b.t_min, g_mu.value, g_mm.value)
                row.update(feasible=a.feasible,
                           r_dl=planner.rates(a, b.w_mm, g_mu.value, g_mm.value).r_dl if a.feasible else math.nan)
            rows.append(row)

    ratios = {a: _rate_ratio(sc, a) for a in FIG6_AREAS}
    summary = {"lambda_mu": d.lambda_mu, "target_mnats": FIG6_TARGET}
    summary.update({f"lambda_mm_over_lambda_u_at_1gbps[S={a:g}]": v for a, v in ratios.items()})
    summary["factor"] = ratios[FIG6_AREAS[1]] / ratios[FIG6_AREAS[0]]

    scan = []
    for lmu in FIG6_SCAN:
        s = sc.with_overrides(lambda_mu=lmu)
        r0, r1 = (_rate_ratio(s, a) for a in FIG6_AREAS)
        scan.append(dict(lambda_mu=lmu, ratio_small_s=r0, ratio_large_s=r1, factor=r1 / r0))

    plot = Plot("maximum downlink rate", "mmWave BS density λm", "rate (Gbit/s)", logx=True)
    for area in FIG6_AREAS:
        sub = [r for r in rows if r["area_in"] == area]
        xs = [r["lambda_mm"] for r in sub]
        if constrained:
            plot.series.append(Series(f"T={b.t_min:g}, S={area:g}", xs,
                                      [r["r_dl"] / FIG6_TARGET for r in sub]))
        plot.series.append(Series(f"no requirement, S={area:g}", xs,
                                  [r["r_dl_unconstrained"] / FIG6_TARGET for r in sub], dashed=True))
    cols = ["area_in", "lambda_mm"] + (["feasible", "r_dl"] if constrained else []) + ["r_dl_unconstrained"]
    extra = ("fig6_scan", ["lambda_mu", "ratio_small_s", "ratio_large_s", "factor"], scan)
    return cols, rows, plot, summary, extra


def _fig7(sc, workers):
    rows, summary = [], {}
    grid = [float(v) for v in np.geomspace(*FIG7_LAMBDA_MM, FIG7_POINTS)]
    for w in FIG7_BANDWIDTHS:
        s = sc.with_overrides(w_mu_total=w)
        for lam in grid:
            lmu = planner.required_mu_density(lam, s)
            sp = s.with_overrides(lambda_mm=lam, lambda_mu=lmu)
            g_mu, g_mm = planner.gamma_pair(sp)
            a = planner.allocate(w, s.bands.w_mm, s.bands.t_min, g_mu.value, g_mm.value)
            p = planner.rates(a, s.bands.w_mm, g_mu.value, g_mm.value)
            rows.append(dict(w_mu_total=w, lambda_mm=lam, lambda_mu_required=lmu, w_ul=a.w_ul,
                             w_dl=a.w_dl, feasible=a.feasible, r_dl=p.r_dl, r_ul=p.r_ul))
        sub = [r for r in rows if r["w_mu_total"] == w]
        slope = np.polyfit(np.log([r["lambda_mm"] for r in sub]),
                           np.log([r["lambda_mu_required"] for r in sub]), 1)[0]
        e = planner.required_density_exponent(s)
        summary[f"slope[W={w:g}]"] = float(slope)
        summary[f"inverse_exponent[W={w:g}]"] = 1 / e
    b, r, d = sc.bands, sc.radio, sc.densities
    summary["required_spectrum"] = planner.required_spectrum(
        b.t_min, b.w_mm, r.alpha_mu, r.alpha_mm_out, d.lambda_g, d.area_in)
    plot = Plot("minimum required μWave BS density", "mmWave BS density λm",
                "required λμ", logx=True, logy=True)
    for w in FIG7_BANDWIDTHS:
        sub = [x for x in rows if x["w_mu_total"] == w]
        plot.series.append(Series(f"W={w:g} MHz", [x["lambda_mm"] for x in sub],
                                  [x["lambda_mu_required"] for x in sub]))
    cols = ["w_mu_total", "lambda_mm", "lambda_mu_required", "w_ul", "w_dl", "feasible", "r_dl", "r_ul"]
    return cols, rows, plot, summary


_BUILDERS = {"fig2": _fig2, "fig3": _fig3, "fig4": _fig4, "fig5": _fig5, "fig6": _fig6, "fig7": _fig7}


def figure_scenario(fig_id, overrides=None, seed=None, trials=None) -> Scenario:
    if fig_id not in FIGURES:
        raise ValueError(f"unknown figure {fig_id!r}; expected one of {FIGURES}")
    pinned = dict(PINNED[fig_id])
    if fig_id in FIGURE_TRIALS:
        pinned["trials"] = FIGURE_TRIALS[fig_id]
    sc = Scenario().with_overrides(**pinned).with_overrides(**(overrides or {}))
    extra = {k: v for k, v in (("seed", seed), ("trials", trials)) if v is not None}
    return validate(sc.with_overrides(**extra))


def build_figure(fig_id, scenario: Scenario, workers=1):
    """``(columns, rows, plot, summary, extra)`` for one figure."""
    with warnings.catch_warnings():
        for cat in (UltraDenseWarning, mc.InsufficientTrials, planner.ClosedFormMismatch):
            warnings.simplefilter("ignore", cat)
        out = _BUILDERS[fig_id](scenario, workers)
    return out if len(out) == 5 else (*out, None)


def make_figure(fig_id, out_dir, overrides=None, seed=None, trials=None, workers=1,
                timestamp=True) -> FigureArtifact:
    sc = figure_scenario(fig_id, overrides, seed, trials)
    cols, rows, plot, summary, extra = build_figure(fig_id, sc, workers)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    echo = [f"figure = {fig_id}"]
    echo += [f"{k} = {fmt(v)}" for k, v in {**sc.flat(), "area_in": sc.area_in}.items()]
    notes = [f"summary {k} = {fmt(v)}" for k, v in summary.items()]

    csv_path = out_dir / f"{fig_id}.csv"
    csv_path.write_text(csv_text(cols, rows, echo + notes), encoding="utf-8", newline="")
    extras = []
    if extra is not None:
        name, ecols, erows = extra
        p = out_dir / f"{name}.csv"
        p.write_text(csv_text(ecols, erows, echo), encoding="utf-8", newline="")
        extras.append(p)
    svg_path = out_dir / f"{fig_id}.svg"
    svg_path.write_text(render(plot, timestamp=timestamp), encoding="utf-8")
    return FigureArtifact(fig_id, csv_path, svg_path, sc, __version__, sc.sim.seed, summary, tuple(extras))

