"""Link budgets and SINR for the three channel models.

Every transmitter sends with unity power; fading powers are exponential
with unit mean. Directional mmWave interference uses a thinning model: an
active interferer has its main lobe on the receiver with probability
theta / (2 pi), and then contributes with the same gain as the serving beam.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

REGIMES = ("mmOut", "mmIn", "mu")


@dataclass(frozen=True)
class LinkSample:
    distance: float
    fading: float = 1.0
    blocked: bool = False

    def __post_init__(self):
        if not self.distance > 0:
            raise ValueError(f"link distance must be > 0, got {self.distance}")
        if self.fading < 0:
            raise ValueError(f"fading power must be >= 0, got {self.fading}")


@dataclass(frozen=True)
class SinrValue:
    value: float
    regime: str


def path_gain(r, alpha):
    """``r ** -alpha`` for ``r > 0`` (scalar or array)."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0):
        raise ValueError("path_gain needs r > 0")
    out = r_arr ** (-float(alpha))
    return float(out) if out.ndim == 0 else out


def sinr(signal, interference, sigma2):
    """Plain ratio; ``interference`` is the already-summed received power."""
    return signal / (interference + sigma2)


def _received(links, alpha):
    if not links:
        return 0.0
    r = np.array([l.distance for l in links])
    g = np.array([l.fading for l in links])
    return math.fsum(g * path_gain(r, alpha))


def sinr_mu(serving: LinkSample, interferers, sigma2, alpha) -> SinrValue:
    """μWave SINR; ``interferers`` must already be restricted to active BSs."""
    signal = serving.fading * path_gain(serving.distance, alpha)
    return SinrValue(sinr(signal, _received(list(interferers), alpha), sigma2), "mu")


def _aligned(interferers):
    return [link for link, aligned in interferers if aligned and not link.blocked]


def sinr_mm_out(serving: LinkSample | None, interferers, sigma2, alpha) -> SinrValue:
    """Outdoor mmWave SINR; zero when the serving link is absent or blocked.

    ``interferers`` is a list of ``(LinkSample, aligned)`` pairs; blocked or
    misaligned ones are dropped.
    """
    if serving is None or serving.blocked:
        return SinrValue(0.0, "mmOut")
    signal = serving.fading * path_gain(serving.distance, alpha)
    return SinrValue(sinr(signal, _received(_aligned(interferers), alpha), sigma2), "mmOut")


def sinr_mm_in(serving: LinkSample, interferers, sigma2) -> SinrValue:
    """Indoor mmWave SINR with free-space exponent 2.

    The caller passes only links inside the receiver's own disk.
    """
    signal = serving.fading * path_gain(serving.distance, 2.0)
    return SinrValue(sinr(signal, _received(_aligned(interferers), 2.0), sigma2), "mmIn")


def draw_alignment(theta, rng, size=None):
    if not 0 < theta <= 2 * math.pi:
        raise ValueError(f"theta must lie in (0, 2*pi], got {theta}")
    p = theta / (2 * math.pi)
    draw = rng.random(size) < p
    return bool(draw) if size is None else draw
