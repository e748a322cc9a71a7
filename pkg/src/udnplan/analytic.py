"""Closed-form spectral-efficiency lower bounds (nats/sec/Hz).

All bounds are evaluated in log space (``log(1 + e^L)`` via ``logaddexp``)
so that very dense networks do not overflow.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .scenario import ExponentOutOfRange, Scenario

NATS_PER_BIT = math.log(2.0)
EXPONENT_FORMS = ("prop2", "cor1")


class DomainError(ValueError):
    """Inputs outside the region where a closed form is defined."""


class UltraDenseWarning(UserWarning):
    """A bound derived for BS density >> user density is used outside that regime."""


@dataclass(frozen=True)
class BoundValue:
    value: float
    regime: str
    inputs: dict = field(default_factory=dict, compare=False)

    def __float__(self):
        return self.value


def _check_alpha(alpha):
    if not alpha > 2 + 1e-9:
        raise ExponentOutOfRange(f"path-loss exponent must exceed 2 (integral diverges), got {alpha}")


def rho(alpha: float) -> float:
    """Integral of ``1 / (1 + u**(alpha/2))`` over ``[0, inf)`` by quadrature.

    The tail ``[1, inf)`` is mapped to ``[0, 1]`` with ``u = 1/v``, which
    leaves an algebraic endpoint weight ``v**(alpha/2 - 2)`` handled by
    QUADPACK's QAWS rule.
    """
    _check_alpha(alpha)
    s = alpha / 2
    opts = dict(epsabs=1e-14, epsrel=1e-13, limit=200)
    head, _ = quad(lambda u: 1.0 / (1.0 + u**s), 0.0, 1.0, **opts)
    tail, _ = quad(lambda v: 1.0 / (1.0 + v**s), 0.0, 1.0, weight="alg", wvar=(s - 2.0, 0.0), **opts)
    return head + tail


def rho_reflection(alpha: float) -> float:
    """Closed form ``(pi/s) / sin(pi/s)`` with ``s = alpha/2``."""
    _check_alpha(alpha)
    x = math.pi / (alpha / 2)
    return x / math.sin(x)


def active_probability(lambda_u, lambda_bs) -> float:
    """Probability that a BS has at least one user in its cell."""
    if not lambda_bs > 0:
        raise DomainError(f"lambda_bs must be > 0, got {lambda_bs}")
    if lambda_u < 0:
        raise DomainError(f"lambda_u must be >= 0, got {lambda_u}")
    return -math.expm1(-3.5 * math.log1p(lambda_u / (3.5 * lambda_bs)))


def active_probability_approx(lambda_u, lambda_bs) -> float:
    """First-order expansion for lambda_bs >> lambda_u."""
    return lambda_u / lambda_bs


def _ultra_dense(name, lam, lambda_u, threshold):
    if lam < threshold * lambda_u:
        warnings.warn(
            f"{name}/lambda_u = {lam / lambda_u:.3g} is below the ultra-dense threshold {threshold}",
            UltraDenseWarning,
            stacklevel=3,
        )


def _log1pexp(x):
    return float(np.logaddexp(0.0, x))


def se_mu_bound(lambda_mu, lambda_u, alpha_mu, ultra_dense_threshold=5.0) -> BoundValue:
    """μWave (uplink or downlink) spectral-efficiency lower bound."""
    if not lambda_u > 0:
        raise DomainError(f"lambda_u must be > 0, got {lambda_u}")
    if not lambda_mu > 0:
        raise DomainError(f"lambda_mu must be > 0, got {lambda_mu}")
    _ultra_dense("lambda_mu", lambda_mu, lambda_u, ultra_dense_threshold)
    r = rho(alpha_mu)
    value = _log1pexp(alpha_mu / 2 * (math.log(lambda_mu) - math.log(r * lambda_u)))
    return BoundValue(value, "mu", dict(lambda_mu=lambda_mu, lambda_u=lambda_u, alpha_mu=alpha_mu))


def se_mm_out_bound(lambda_mm, lambda_u, alpha_mm, lambda_g, area_in, theta) -> BoundValue:
    """Outdoor mmWave lower bound.

    The blockage discount ``1 - sqrt(S / lambda_mm)`` multiplies the
    logarithm, i.e. it is read as a power on the log's argument.
    """
    if not theta > 0:
        raise DomainError(f"theta must be > 0, got {theta}")
    if not lambda_u > 0:
        raise DomainError(f"lambda_u must be > 0, got {lambda_u}")
    if not lambda_mm > area_in:
        raise DomainError(f"need lambda_mm > area_in, got lambda_mm={lambda_mm}, area_in={area_in}")
    r = rho(alpha_mm)
    inner = math.log(2 * math.pi / theta) + alpha_mm / 2 * (
        lambda_g * area_in + math.log(lambda_mm) - math.log(r * lambda_u)
    )
    value = (1 - math.sqrt(area_in / lambda_mm)) * _log1pexp(inner)
    return BoundValue(value, "mm_out", dict(
        lambda_mm=lambda_mm, lambda_u=lambda_u, alpha_mm=alpha_mm,
        lambda_g=lambda_g, area_in=area_in, theta=theta))


def se_mm_in_bound(lambda_mm, sigma2) -> BoundValue:
    """Indoor (noise-limited) mmWave lower bound ``log(1 + pi lambda_mm / sigma2)``."""
    if not lambda_mm > 0:
        raise DomainError(f"lambda_mm must be > 0, got {lambda_mm}")
    if not sigma2 > 0:
        raise DomainError(f"sigma2 must be > 0, got {sigma2}")
    return BoundValue(math.log1p(math.pi * lambda_mm / sigma2), "mm_in",
                      dict(lambda_mm=lambda_mm, sigma2=sigma2))


def mm_density_exponent(alpha_mm, lambda_g, area_in, form="prop2") -> float:
    """Power of lambda_mm inside the overall mmWave bound.

    ``prop2``: (alpha/2 - 1) e^{-lambda_g S} + 1, the default.
    ``cor1``:  (alpha/2) e^{-lambda_g S} + 1, as printed in the downlink-rate
    closed form.
    """
    if form not in EXPONENT_FORMS:
        raise ValueError(f"form must be one of {EXPONENT_FORMS}, got {form!r}")
    p = math.exp(-lambda_g * area_in)
    return ((alpha_mm / 2 - 1) if form == "prop2" else alpha_mm / 2) * p + 1


def _mm_log_argument(lambda_mm, lambda_u, alpha_mm, lambda_g, area_in, theta, sigma2, form):
    """log of the term added to 1 inside the overall mmWave bound."""
    p = math.exp(-lambda_g * area_in)
    expo = mm_density_exponent(alpha_mm, lambda_g, area_in, form)
    bracket = math.log(2 * sigma2 / theta) + alpha_mm / 2 * (lambda_g * area_in - math.log(rho(alpha_mm) * lambda_u))
    return math.log(math.pi) + expo * math.log(lambda_mm) - math.log(sigma2) + p * bracket


def mm_bound(lambda_mm, lambda_u, alpha_mm, lambda_g, area_in, theta, sigma2, form="prop2") -> BoundValue:
    """Overall (indoor/outdoor mixture) mmWave lower bound."""
    for name, v in (("lambda_mm", lambda_mm), ("lambda_u", lambda_u), ("theta", theta), ("sigma2", sigma2)):
        if not v > 0:
            raise DomainError(f"{name} must be > 0, got {v}")
    L = _mm_log_argument(lambda_mm, lambda_u, alpha_mm, lambda_g, area_in, theta, sigma2, form)
    return BoundValue(_log1pexp(L), "mm", dict(
        lambda_mm=lambda_mm, lambda_u=lambda_u, alpha_mm=alpha_mm, lambda_g=lambda_g,
        area_in=area_in, theta=theta, sigma2=sigma2, form=form))


def se_mm_bound(scenario: Scenario, form="prop2") -> BoundValue:
    r, d = scenario.radio, scenario.densities
    return mm_bound(d.lambda_mm, d.lambda_u, r.alpha_mm_out, d.lambda_g, d.area_in,
                    r.theta, r.sigma2, form)


def se_mm_rate_bound(scenario: Scenario, form="prop2") -> BoundValue:
    """Overall mmWave bound with the outdoor blockage discount applied.

    This is the mmWave efficiency implied by the closed-form maximum
    downlink rate: ``(1 - sqrt(S / lambda_mm))`` times the overall bound.
    """
    d = scenario.densities
    if not d.lambda_mm > d.area_in:
        raise DomainError(f"need lambda_mm > area_in, got lambda_mm={d.lambda_mm}, area_in={d.area_in}")
    base = se_mm_bound(scenario, form)
    value = (1 - math.sqrt(d.area_in / d.lambda_mm)) * base.value
    return BoundValue(value, "mm_rate", dict(base.inputs))


def bound_for(regime: str, scenario: Scenario, form="prop2") -> BoundValue:
    """Analytic counterpart of a Monte Carlo regime."""
    r, d = scenario.radio, scenario.densities
    if regime in ("mu_dl", "mu_ul"):
        return se_mu_bound(d.lambda_mu, d.lambda_u, r.alpha_mu)
    if regime == "mm_out":
        return se_mm_out_bound(d.lambda_mm, d.lambda_u, r.alpha_mm_out, d.lambda_g, d.area_in, r.theta)
    if regime == "mm_in":
        return se_mm_in_bound(d.lambda_mm, r.sigma2)
    if regime == "mm":
        return se_mm_bound(scenario, form)
    raise ValueError(f"unknown regime {regime!r}")


def nats_to_bits(x):
    return x / NATS_PER_BIT
