"""Seeded Monte Carlo estimates of E[log(1 + SINR)] in nats/sec/Hz.

Each trial draws a fresh deployment on the torus window and adds a probe
(the typical user) to the user process. Trial ``i`` always uses the stream
``SeedSequence(seed, spawn_key=(regime, params, i))`` and per-trial results
are combined with an exact sum, so the estimate does not depend on how many
worker processes ran the trials.
"""

from __future__ import annotations

import hashlib
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from statistics import NormalDist

import numpy as np
from scipy.spatial import cKDTree

from .geometry import LosIndex, PointSet, sample_disks, sample_ppp, torus_distance, wrap
from .propagation import draw_alignment, path_gain, sinr
from .scenario import Scenario, SimControl, validate

log = logging.getLogger(__name__)

REGIMES = ("mu_dl", "mu_ul", "mm_out", "mm_in", "mm")
MIN_DISTANCE_FRACTION = 1e-6
_MAX_PLACEMENT_TRIES = 10_000


class InsufficientTrials(UserWarning):
    pass


@dataclass(frozen=True)
class SeEstimate:
    regime: str
    mean: float
    stderr: float
    n_trials: int
    ci_low: float
    ci_high: float
    zero_rate: float
    seed: int
    params_hash: str
    eps_hits: int = 0

    @property
    def ci_half_width(self) -> float:
        return (self.ci_high - self.ci_low) / 2


def active_bs(bs: PointSet, users: PointSet, disks=None, los_index=None, bs_tree=None) -> np.ndarray:
    """Sorted indices of BSs picked by at least one user.

    Users pick their nearest BS, or their nearest line-of-sight BS when
    ``disks`` (or a prebuilt ``los_index``) is given.
    """
    if len(bs) == 0 or len(users) == 0:
        return np.empty(0, dtype=int)
    return np.unique(_associate(bs, users.points, disks, los_index, bs_tree)[0])


def _associate(bs, pts, disks=None, los_index=None, bs_tree=None):
    side = bs.window_side
    if bs_tree is None:
        bs_tree = cKDTree(wrap(bs.points, side), boxsize=side)
    if disks is None and los_index is None:
        dist, idx = bs_tree.query(wrap(pts, side))
        return np.asarray(idx, dtype=int), np.asarray(dist)
    los_index = los_index or LosIndex(disks)
    idx, dist = los_index.nearest_los(pts, bs, bs_tree)
    keep = idx >= 0
    return idx[keep], dist[keep]


class _Trial:
    """Shared per-trial bookkeeping: minimum-distance guard and its counter."""

    def __init__(self, scenario: Scenario):
        self.sc = scenario
        self.side = scenario.sim.window_side
        self.eps = MIN_DISTANCE_FRACTION * self.side
        self.eps_hits = 0

    def guard(self, r):
        r = np.asarray(r, dtype=float)
        self.eps_hits += int(np.count_nonzero(r < self.eps))
        return np.maximum(r, self.eps)


def _trial_mu(scenario: Scenario, rng, uplink: bool):
    t = _Trial(scenario)
    d, side = scenario.densities, t.side
    alpha, sigma2 = scenario.radio.alpha_mu, scenario.radio.sigma2
    bs = sample_ppp(d.lambda_mu, side, rng, "muWaveBS")
    users = sample_ppp(d.lambda_u, side, rng, "user")
    if len(bs) == 0:
        return 0.0, True, 0
    probe = np.array([[side / 2, side / 2]])
    pts = np.vstack([probe, users.points])
    tree = cKDTree(wrap(bs.points, side), boxsize=side)
    idx, _ = _associate(bs, pts, bs_tree=tree)
    serving = idx[0]

    if not uplink:
        active = np.unique(idx)
        others = active[active != serving]
        rx = probe[0]
        r = torus_distance(rx, bs.points[serving], side)
        ri = torus_distance(rx, bs.points[others], side)
    else:
        # one uplink user per active BS, uniform among its associated users
        order = rng.permutation(len(pts))
        cell_of = idx[order]
        cells, first = np.unique(cell_of, return_index=True)
        scheduled = order[first]
        rx = bs.points[serving]
        r = torus_distance(rx, pts[scheduled[cells == serving][0]], side)
        ri = torus_distance(rx, pts[scheduled[cells != serving]], side)

    g = rng.exponential(size=1 + len(ri))
    signal = g[0] * path_gain(t.guard(r), alpha)
    interference = math.fsum(g[1:] * path_gain(t.guard(ri), alpha)) if len(ri) else 0.0
    return math.log1p(sinr(signal, interference, sigma2)), False, t.eps_hits


def _place_probe(scenario, rng, disks: LosIndex, placement):
    side = scenario.sim.window_side
    if placement == "indoor":
        if len(disks.disks) == 0:
            return None
        j = rng.integers(len(disks.disks))
        rad = disks.radius * math.sqrt(rng.random())
        phi = rng.uniform(0.0, 2 * math.pi)
        p = disks.disks.centers[j] + rad * np.array([math.cos(phi), math.sin(phi)])
        return wrap(p, side)
    for _ in range(_MAX_PLACEMENT_TRIES):
        p = rng.uniform(0.0, side, size=2)
        if placement == "any" or len(disks.containing(p)[0]) == 0:
            return p
    raise RuntimeError("could not place an outdoor probe; indoor regions cover the window")



def _trial_mm(scenario: Scenario, rng, placement: str):
    t = _Trial(scenario)
    r_, d, side = scenario.radio, scenario.densities, t.side
    disks = sample_disks(d.lambda_g, d.radius_in, side, rng)
    bs = sample_ppp(d.lambda_mm, side, rng, "mmWaveBS")
    users = sample_ppp(d.lambda_u, side, rng, "user")
    los = LosIndex(disks)
    probe = None
    for _ in range(_MAX_PLACEMENT_TRIES):
        probe = _place_probe(scenario, rng, los, placement)
        if probe is not None:
            break
        # no disk in the window: redraw the indoor regions
        disks = sample_disks(d.lambda_g, d.radius_in, side, rng)
        los = LosIndex(disks)
    if probe is None:
        raise RuntimeError("no indoor region could be sampled; lambda_g or the window is too small")
    if len(bs) == 0:
        return 0.0, True, 0

    pts = np.vstack([probe, users.points])
    tree = cKDTree(wrap(bs.points, side), boxsize=side)
    idx, dist = los.nearest_los(pts, bs, tree)
    serving = idx[0]
    if serving < 0:
        return 0.0, True, 0

    indoor = len(los.containing(probe)[0]) > 0
    alpha = r_.alpha_mm_in if indoor else r_.alpha_mm_out
    active = np.unique(idx[idx >= 0])
    others = active[active != serving]
    others = others[draw_alignment(r_.theta, rng, size=len(others))]
    if len(others):
        others = others[los.clear(np.repeat(probe[None, :], len(others), axis=0), bs.points[others])]
    ri = torus_distance(probe, bs.points[others], side)

    g = rng.exponential(size=1 + len(ri))
    signal = g[0] * path_gain(t.guard(dist[0]), alpha)
    interference = math.fsum(g[1:] * path_gain(t.guard(ri), alpha)) if len(ri) else 0.0
    return math.log1p(sinr(signal, interference, r_.sigma2)), False, t.eps_hits


def run_trial(regime: str, scenario: Scenario, rng):
    """One realization: ``(log(1+SINR), zero_flag, eps_hits)``."""
    if regime == "mu_dl":
        return _trial_mu(scenario, rng, uplink=False)
    if regime == "mu_ul":
        return _trial_mu(scenario, rng, uplink=True)
    if regime == "mm_out":
        return _trial_mm(scenario, rng, "outdoor")
    if regime == "mm_in":
        return _trial_mm(scenario, rng, "indoor")
    if regime == "mm":
        return _trial_mm(scenario, rng, "any")
    raise ValueError(f"unknown regime {regime!r}; expected one of {REGIMES}")


def physical_key(scenario: Scenario) -> int:
    """Stable integer key of the physical parameters (not the sim controls)."""
    text = repr((sorted(vars(scenario.radio).items()), sorted(vars(scenario.densities).items())))
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "little")


def trial_seeds(seed: int, regime: str, scenario: Scenario, start: int, stop: int, crn=False):
    key = 0 if crn else physical_key(scenario)
    code = REGIMES.index(regime)
    return [np.random.SeedSequence(seed, spawn_key=(code, key, i)) for i in range(start, stop)]


def _run_chunk(regime, scenario, seed, start, stop, crn):
    values = np.empty(stop - start)
    zeros = np.zeros(stop - start, dtype=bool)
    eps = 0
    for k, ss in enumerate(trial_seeds(seed, regime, scenario, start, stop, crn)):
        values[k], zeros[k], e = run_trial(regime, scenario, np.random.default_rng(ss))
        eps += e
    return start, values, zeros, eps


def estimate(regime: str, scenario: Scenario, sim: SimControl | None = None,
             workers: int = 1, crn: bool = False, rel_se_target: float = 0.02) -> SeEstimate:
    """Monte Carlo estimate for one regime.

    ``sim`` overrides the scenario's own simulation controls. ``crn`` reuses
    the same random streams for every parameter set (common random numbers
    across a sweep).
    """
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}; expected one of {REGIMES}")
    if sim is not None:
        scenario = replace(scenario, sim=sim)
    validate(scenario)
    n, seed = scenario.sim.trials, scenario.sim.seed

    values = np.empty(n)
    zeros = np.zeros(n, dtype=bool)
    eps_hits = 0
    if workers <= 1 or n < 2 * workers:
        _, values, zeros, eps_hits = _run_chunk(regime, scenario, seed, 0, n, crn)
    else:
        bounds = np.linspace(0, n, 4 * workers + 1).astype(int)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_chunk, regime, scenario, seed, a, b, crn)
                       for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
            for fut in futures:
                start, v, z, e = fut.result()
                values[start:start + len(v)] = v
                zeros[start:start + len(z)] = z
                eps_hits += e

    mean = math.fsum(values) / n
    if n > 1:
        stderr = math.sqrt(math.fsum((values - mean) ** 2) / (n - 1) / n)
    else:
        stderr = math.inf
    z = NormalDist().inv_cdf(0.5 + scenario.sim.ci_level / 2)
    est = SeEstimate(
        regime=regime, mean=mean, stderr=stderr, n_trials=n,
        ci_low=mean - z * stderr, ci_high=mean + z * stderr,
        zero_rate=float(np.count_nonzero(zeros)) / n,
        seed=seed, params_hash=scenario.params_hash(), eps_hits=eps_hits,
    )
    if eps_hits:
        log.info("%s: %d link distances clamped to %.3g", regime, eps_hits,
                 MIN_DISTANCE_FRACTION * scenario.sim.window_side)
    if mean > 0 and stderr / mean > rel_se_target:
        warnings.warn(
            f"{regime}: stderr/mean = {stderr / mean:.3g} exceeds {rel_se_target} after {n} trials",
            InsufficientTrials, stacklevel=2,
        )
    return est


def estimate_mu_dl(scenario, sim=None, **kw) -> SeEstimate:
    return estimate("mu_dl", scenario, sim, **kw)


def estimate_mu_ul(scenario, sim=None, **kw) -> SeEstimate:
    return estimate("mu_ul", scenario, sim, **kw)


def estimate_mm_out(scenario, sim=None, **kw) -> SeEstimate:
    return estimate("mm_out", scenario, sim, **kw)


def estimate_mm_in(scenario, sim=None, **kw) -> SeEstimate:
    return estimate("mm_in", scenario, sim, **kw)


def estimate_mm_overall(scenario, sim=None, **kw) -> SeEstimate:
    return estimate("mm", scenario, sim, **kw)
