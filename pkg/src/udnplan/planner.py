"""μWave bandwidth split and cell-planning rules under a minimum uplink/downlink
rate ratio.

Bandwidths are in MHz and spectral efficiencies in nats/sec/Hz, so rates
come out in Mnats/s (``RatePair.bits`` converts to Mbit/s).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import analytic
from .analytic import BoundValue, DomainError, se_mm_rate_bound, se_mu_bound
from .scenario import Scenario

CLOSED_FORM_RTOL = 1e-3


class Infeasible(Exception):
    """The uplink-ratio requirement cannot be met with the available bandwidth."""

    def __init__(self, message, allocation=None):
        super().__init__(message)
        self.allocation = allocation


class NoSolution(Exception):
    pass


class ClosedFormMismatch(UserWarning):
    pass


@dataclass(frozen=True)
class Allocation:
    w_ul: float
    w_dl: float
    feasible: bool
    slack: float


@dataclass(frozen=True)
class RatePair:
    r_dl: float
    r_ul: float

    @property
    def bits(self) -> "RatePair":
        return RatePair(self.r_dl / analytic.NATS_PER_BIT, self.r_ul / analytic.NATS_PER_BIT)


@dataclass(frozen=True)
class DownlinkPlan:
    rates: RatePair
    allocation: Allocation
    gamma_mu: BoundValue
    gamma_mm: BoundValue
    closed_form: float
    rel_gap: float


def gamma_pair(scenario: Scenario, form="prop2", discount=False):
    """Analytic (gamma_mu, gamma_mm) fed to the planner.

    ``discount=False`` uses the overall mmWave bound as is; ``True`` applies
    the outdoor blockage factor used by the maximum-rate closed form.
    """
    d = scenario.densities
    g_mu = se_mu_bound(d.lambda_mu, d.lambda_u, scenario.radio.alpha_mu)
    g_mm = se_mm_rate_bound(scenario, form) if discount else analytic.se_mm_bound(scenario, form)
    return g_mu, g_mm


def allocate(w_total, w_mm, t, gamma_mu, gamma_mm) -> Allocation:
    """Split ``w_total`` between uplink and downlink so that R_u / R_d = t.

    The optimum puts the ratio constraint at equality. When even the whole
    band on uplink cannot reach ``t`` the result is marked infeasible, carries
    a negative slack, and gives the whole band to uplink.
    """
    if not gamma_mu > 0:
        raise ValueError(f"gamma_mu must be > 0, got {gamma_mu}")
    if not 0 <= t <= 1:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    ratio = gamma_mm / gamma_mu
    slack = w_total - t * w_mm * ratio
    if slack >= 0:
        w_ul = min(t / (1 + t) * (w_total + w_mm * ratio), w_total)
        return Allocation(w_ul, w_total - w_ul, True, slack)
    return Allocation(float(w_total), 0.0, False, slack)


def rates(alloc: Allocation, w_mm, gamma_mu, gamma_mm) -> RatePair:
    return RatePair(
        r_dl=alloc.w_dl * gamma_mu + w_mm * gamma_mm,
        r_ul=alloc.w_ul * gamma_mu,
    )


def closed_form_max_dl_rate(scenario: Scenario, form="prop2") -> float:
    """Maximum downlink rate from the single-logarithm closed form.

    It merges ``W log(1+a) + Wm log(1+b)`` into ``log(1 + a^W b^Wm)``, which
    is accurate once both efficiencies are large.
    """
    r, d, b = scenario.radio, scenario.densities, scenario.bands
    S = d.area_in
    if not d.lambda_mm > S:
        raise DomainError(f"need lambda_mm > area_in, got lambda_mm={d.lambda_mm}, area_in={S}")
    W, Wm, T = b.w_mu_total, b.w_mm, b.t_min
    f = 1 - math.sqrt(S / d.lambda_mm)
    p = math.exp(-d.lambda_g * S)
    rho_m, rho_mu = analytic.rho(r.alpha_mm_out), analytic.rho(r.alpha_mu)
    expo = analytic.mm_density_exponent(r.alpha_mm_out, d.lambda_g, S, form)
    log_cd = (
        Wm * f * (math.log(math.pi / r.sigma2)
                  + p * (math.log(2 * r.sigma2 / r.theta)
                         - r.alpha_mm_out / 2 * math.log(rho_m * p * d.lambda_u)))
        - r.alpha_mu * W / 2 * math.log(rho_mu * d.lambda_u)
    )
    L = log_cd + Wm * f * expo * math.log(d.lambda_mm) + W * r.alpha_mu / 2 * math.log(d.lambda_mu)
    return float(np.logaddexp(0.0, L)) / (1 + T)


def max_dl_rate(scenario: Scenario, form="prop2", source="analytic", sim=None) -> DownlinkPlan:
    """Largest downlink rate that still honours the uplink ratio ``t_min``.

    The rate is composed from :func:`allocate` and :func:`rates`; the closed
    form is evaluated alongside and their relative gap is reported (and
    warned about when above ``CLOSED_FORM_RTOL`` for analytic inputs).
    ``source="mc"`` feeds Monte Carlo estimates instead of the bounds.
    """
    d, b = scenario.densities, scenario.bands
    if source == "analytic":
        g_mu, g_mm = gamma_pair(scenario, form, discount=True)
    elif source == "mc":
        from . import mc

        g_mu = BoundValue(mc.estimate_mu_dl(scenario, sim).mean, "mu", {"source": "mc"})
        g_mm = BoundValue(mc.estimate_mm_overall(scenario, sim).mean, "mm", {"source": "mc"})
    else:
        raise ValueError(f"source must be 'analytic' or 'mc', got {source!r}")

    alloc = allocate(b.w_mu_total, b.w_mm, b.t_min, g_mu.value, g_mm.value)
    if not alloc.feasible:
        raise Infeasible(
            f"W = {b.w_mu_total} MHz is below T*Wm*gamma_mm/gamma_mu = "
            f"{b.w_mu_total - alloc.slack:.6g} MHz",
            alloc,
        )
    pair = rates(alloc, b.w_mm, g_mu.value, g_mm.value)
    closed = closed_form_max_dl_rate(scenario, form)
    gap = abs(pair.r_dl - closed) / pair.r_dl if pair.r_dl > 0 else abs(closed)
    if source == "analytic" and gap > CLOSED_FORM_RTOL:
        warnings.warn(f"composed and closed-form downlink rates differ by {gap:.2e} (relative)",
                      ClosedFormMismatch, stacklevel=2)
    return DownlinkPlan(pair, alloc, g_mu, g_mm, closed, gap)


def lambda_mm_for_rate(scenario: Scenario, target, form="prop2", constrained=True) -> float:
    """mmWave density at which the maximum downlink rate reaches ``target`` (Mnats/s).

    The rate is increasing in lambda_mm, so the root is bracketed
    geometrically above ``area_in`` and refined with Brent's method. With
    ``constrained`` the ratio requirement applies and an infeasible root
    raises :class:`Infeasible`.
    """
    d, b = scenario.densities, scenario.bands
    t = b.t_min if constrained else 0.0
    sc = scenario.with_overrides(t_min=t)

    def excess(log_lam):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", analytic.UltraDenseWarning)
            g_mu, g_mm = gamma_pair(sc.with_overrides(lambda_mm=math.exp(log_lam)), form, discount=True)
        return (b.w_mu_total * g_mu.value + b.w_mm * g_mm.value) / (1 + t) - target

    lo = math.log(d.area_in) + 1e-12 if d.area_in > 0 else math.log(1e-12)
    if excess(lo) >= 0:
        return math.exp(lo)
    hi = lo + math.log(2.0)
    while excess(hi) < 0:
        hi += (hi - lo)
        if hi > 700:
            raise NoSolution(f"rate {target} unreachable")
    lam = math.exp(brentq(excess, lo, hi, xtol=1e-14, rtol=1e-12))
    if constrained and t > 0:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", analytic.UltraDenseWarning)
            g_mu, g_mm = gamma_pair(sc.with_overrides(lambda_mm=lam), form, discount=True)
        alloc = allocate(b.w_mu_total, b.w_mm, t, g_mu.value, g_mm.value)
        if not alloc.feasible:
            raise Infeasible(f"rate {target} needs lambda_mm = {lam:.6g}, where the uplink ratio cannot be met",
                             alloc)
    return lam


def required_density_exponent(scenario: Scenario) -> float:
    """Exponent ``e`` in lambda_mm ~ lambda_mu**e along the feasibility boundary.

    Its reciprocal is the growth order of the required μWave density in the
    mmWave density; ``e < 1`` means super-linear growth.
    """
    r, d, b = scenario.radio, scenario.densities, scenario.bands
    if not b.t_min > 0:
        raise DomainError("required_density_exponent needs t_min > 0")
    if not b.w_mm > 0:
        raise DomainError("required_density_exponent needs w_mm > 0")
    p = math.exp(-d.lambda_g * d.area_in)
    return r.alpha_mu * b.w_mu_total / (b.t_min * b.w_mm * ((r.alpha_mm_out - 2) * p + 2))


def required_mu_density(lambda_mm, scenario: Scenario, form="prop2", rtol=1e-9) -> float:
    """Smallest μWave density meeting W*gamma_mu = T*Wm*gamma_mm at ``lambda_mm``.

    Bisection in log-density on the increasing μWave bound; the returned
    value is the feasible end of the final bracket.
    """
    r, d, b = scenario.radio, scenario.densities, scenario.bands
    if b.t_min == 0 or b.w_mm == 0:
        return 0.0
    if not lambda_mm > d.area_in:
        raise DomainError(f"need lambda_mm > area_in, got lambda_mm={lambda_mm}, area_in={d.area_in}")
    if not b.w_mu_total > 0:
        raise NoSolution("W = 0 cannot carry any uplink rate")
    g_mm = analytic.mm_bound(lambda_mm, d.lambda_u, r.alpha_mm_out, d.lambda_g, d.area_in,
                             r.theta, r.sigma2, form).value
    target = b.t_min * b.w_mm * g_mm / b.w_mu_total

    def gap(log_lam):
        return se_mu_bound(math.exp(log_lam), d.lambda_u, r.alpha_mu, ultra_dense_threshold=0).value - target

    lo = hi = math.log(max(d.lambda_u, lambda_mm))
    step = math.log(2.0)
    while gap(hi) < 0:
        hi += step
        step *= 2
        if hi > 700:
            raise NoSolution("required μWave density overflows")
    step = math.log(2.0)
    while gap(lo) >= 0:
        lo -= step
        step *= 2
        if lo < -700:
            return 0.0
    tol = math.log1p(rtol)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gap(mid) >= 0:
            hi = mid
        else:
            lo = mid
    return math.exp(hi)


def required_spectrum(t, w_mm, alpha_mu, alpha_mm, lambda_g, area_in) -> float:
    """μWave bandwidth (MHz) needed when both densities grow proportionally."""
    return t * w_mm / alpha_mu * ((alpha_mm - 2) * math.exp(-lambda_g * area_in) + 2)
