"""Random deployments on a square torus and the distance/blockage queries
run against them.

Every distance is measured with the wrap-around metric, so a probe placed
anywhere in the window sees a statistically homogeneous plane.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

KINDS = ("mmWaveBS", "muWaveBS", "user")


@dataclass(frozen=True, eq=False)
class PointSet:
    points: np.ndarray
    kind: str
    window_side: float

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True, eq=False)
class DiskSet:
    centers: np.ndarray
    radius: float
    window_side: float

    def __len__(self):
        return len(self.centers)

    @property
    def overlap_count(self) -> int:
        """Number of disk pairs that overlap. Overlaps are kept, only counted."""
        if len(self) < 2 or self.radius <= 0:
            return 0
        tree = cKDTree(self.centers, boxsize=self.window_side)
        return len(tree.query_pairs(2 * self.radius * (1 - 1e-12)))


@dataclass(frozen=True, eq=False)
class Deployment:
    mm_bs: PointSet
    mu_bs: PointSet
    users: PointSet
    disks: DiskSet
    window_side: float


def wrap(points, side):
    return np.mod(points, side)


def torus_delta(a, b, side):
    """Shortest displacement from ``a`` to ``b`` on the torus."""
    d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
    return d - side * np.round(d / side)


def torus_distance(a, b, side):
    d = torus_delta(a, b, side)
    return np.hypot(d[..., 0], d[..., 1])


def sample_ppp(density, window_side, rng, kind="user") -> PointSet:
    if density < 0:
        raise ValueError(f"density must be >= 0, got {density}")
    n = rng.poisson(density * window_side * window_side)
    pts = rng.uniform(0.0, window_side, size=(n, 2))
    return PointSet(pts, kind, window_side)


def sample_disks(lambda_g, radius, window_side, rng) -> DiskSet:
    centers = sample_ppp(lambda_g, window_side, rng).points
    return DiskSet(centers, float(radius), window_side)


def sample_deployment(scenario, rng) -> Deployment:
    d, side = scenario.densities, scenario.sim.window_side
    return Deployment(
        mm_bs=sample_ppp(d.lambda_mm, side, rng, "mmWaveBS"),
        mu_bs=sample_ppp(d.lambda_mu, side, rng, "muWaveBS"),
        users=sample_ppp(d.lambda_u, side, rng, "user"),
        disks=sample_disks(d.lambda_g, d.radius_in, side, rng),
        window_side=side,
    )


def is_indoor(p, disks: DiskSet) -> bool:
    if len(disks) == 0:
        return False
    return bool(np.any(torus_distance(p, disks.centers, disks.window_side) < disks.radius))


def _segment_distance(c, a, d):
    """Distance from points ``c`` to the segments ``a -> a + d`` (row-wise)."""
    dd = np.einsum("...i,...i->...", d, d)
    t = np.einsum("...i,...i->...", c - a, d) / np.where(dd > 0, dd, 1.0)
    t = np.clip(t, 0.0, 1.0)
    foot = a + t[..., None] * d
    return np.hypot(*(c - foot).T) if c.ndim == 2 else float(np.hypot(*(c - foot)))


def los_clear(a, b, disks: DiskSet) -> bool:
    """True when no indoor wall separates ``a`` and ``b``.

    A segment with both ends inside one common disk stays inside it (disks
    are convex) and is clear. Otherwise any disk whose interior the segment
    touches puts a wall across it.
    """
    if len(disks) == 0:
        return True
    side, R = disks.window_side, disks.radius
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    in_a = torus_distance(a, disks.centers, side) < R
    in_b = torus_distance(b, disks.centers, side) < R
    if np.any(in_a & in_b):
        return True
    if np.any(in_a) or np.any(in_b):
        return False
    d = torus_delta(a, b, side)
    mid = a + d / 2
    centers = mid + torus_delta(mid, disks.centers, side)
    dist = _segment_distance(centers, np.broadcast_to(mid - d / 2, centers.shape),
                             np.broadcast_to(d, centers.shape))
    return not bool(np.any(dist < R))


def nearest(p, s: PointSet):
    """(index, distance) of the member of ``s`` closest to ``p``; ties go to
    the lowest index."""
    if len(s) == 0:
        raise ValueError("nearest() on an empty point set")
    dist = torus_distance(p, s.points, s.window_side)
    i = int(np.argmin(dist))
    return i, float(dist[i])


def nearest_los(p, s: PointSet, disks: DiskSet):
    """Nearest member of ``s`` with a clear line of sight to ``p``, or None."""
    idx, dist = LosIndex(disks).nearest_los(np.atleast_2d(p), s)
    if idx[0] < 0:
        return None
    return int(idx[0]), float(dist[0])


class LosIndex:
    """Batch version of the blockage queries, backed by KD-trees."""

    def __init__(self, disks: DiskSet):
        self.disks = disks
        self.side = disks.window_side
        self.radius = disks.radius
        self._tree = (
            cKDTree(wrap(disks.centers, self.side), boxsize=self.side)
            if len(disks) and disks.radius > 0 else None
        )

    def _pairs(self, tree, centers, pts, r):
        """Flattened (row, member) pairs with member strictly within ``r`` of row."""
        hits = tree.query_ball_point(wrap(pts, self.side), r=r)
        counts = np.fromiter((len(h) for h in hits), int, len(pts))
        owner = np.repeat(np.arange(len(pts)), counts)
        member = np.fromiter((j for h in hits for j in h), int, counts.sum())
        keep = torus_distance(pts[owner], centers[member], self.side) < r
        return owner[keep], member[keep]

    def containing_pairs(self, pts):
        """``(point_row, disk)`` index pairs with the point strictly inside the disk."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self._tree is None or len(pts) == 0:
            return np.empty(0, dtype=int), np.empty(0, dtype=int)
        return self._pairs(self._tree, self.disks.centers, pts, self.radius)

    def containing(self, pts):
        """List of arrays: indices of the disks strictly containing each point."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        owner, disk = self.containing_pairs(pts)
        order = np.lexsort((disk, owner))
        owner, disk = owner[order], disk[order]
        cuts = np.searchsorted(owner, np.arange(1, len(pts)))
        return np.split(disk, cuts)

    def clear(self, a, b, a_outdoor=False):
        """Row-wise :func:`los_clear` for point arrays ``a`` and ``b``.

        ``a_outdoor`` skips the containment test for ``a`` when the caller
        already knows every row of ``a`` is outside all disks.
        """
        a = np.atleast_2d(np.asarray(a, dtype=float))
        b = np.atleast_2d(np.asarray(b, dtype=float))
        n = len(a)
        if self._tree is None or n == 0:
            return np.ones(n, dtype=bool)
        nd = len(self.disks)
        ra, da = (np.empty(0, dtype=int),) * 2 if a_outdoor else self.containing_pairs(a)
        rb, db = self.containing_pairs(b)
        a_in = np.bincount(ra, minlength=n) > 0
        b_in = np.bincount(rb, minlength=n) > 0
        out = np.zeros(n, dtype=bool)
        shared = np.isin(ra * nd + da, rb * nd + db)
        out[ra[shared]] = True
        rows = np.flatnonzero(~a_in & ~b_in)
        if len(rows) == 0:
            return out
        d = torus_delta(a[rows], b[rows], self.side)
        mid = a[rows] + d / 2
        half = np.hypot(d[:, 0], d[:, 1]) / 2
        hits = self._tree.query_ball_point(wrap(mid, self.side), r=half + self.radius)
        counts = np.fromiter((len(h) for h in hits), int, len(rows))
        blocked = np.zeros(len(rows), dtype=bool)
        if counts.sum():
            owner = np.repeat(np.arange(len(rows)), counts)
            disk = np.fromiter((j for h in hits for j in h), int, counts.sum())
            m = mid[owner]
            c = m + torus_delta(m, self.disks.centers[disk], self.side)
            dist = _segment_distance(c, m - d[owner] / 2, d[owner])
            blocked = np.bincount(owner[dist < self.radius], minlength=len(rows)) > 0
        out[rows] = ~blocked
        return out

    def nearest_los(self, pts, bs: PointSet, bs_tree=None, k0=8):
        """Nearest line-of-sight member of ``bs`` for each row of ``pts``.

        Returns ``(index, distance)`` arrays; index -1 (distance inf) marks a
        point with every candidate blocked.
        """
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        n, nbs = len(pts), len(bs)
        idx = np.full(n, -1, dtype=int)
        dist = np.full(n, np.inf)
        if n == 0 or nbs == 0:
            return idx, dist
        if bs_tree is None:
            bs_tree = cKDTree(wrap(bs.points, self.side), boxsize=self.side)
        owner, disk = self.containing_pairs(pts)
        indoor = np.zeros(n, dtype=bool)
        indoor[owner] = True
        if len(owner):
            # candidates for an indoor point: BSs sharing one of its disks
            used = np.unique(disk)
            d_row, b_idx = self._pairs(bs_tree, bs.points, self.disks.centers[used], self.radius)
            d_idx = used[d_row]
            order = np.argsort(d_idx, kind="stable")
            d_idx, b_idx = d_idx[order], b_idx[order]
            lo = np.searchsorted(d_idx, disk, side="left")
            cnt = np.searchsorted(d_idx, disk, side="right") - lo
            p_rows = np.repeat(owner, cnt)
            starts = np.repeat(lo - np.cumsum(cnt) + cnt, cnt)
            cand = b_idx[np.arange(cnt.sum()) + starts]
            dd = torus_distance(pts[p_rows], bs.points[cand], self.side)
            order = np.lexsort((cand, dd, p_rows))
            p_rows, cand, dd = p_rows[order], cand[order], dd[order]
            first = np.unique(p_rows, return_index=True)[1]
            idx[p_rows[first]] = cand[first]
            dist[p_rows[first]] = dd[first]

        todo = np.flatnonzero(~indoor)
        done_cols = 0
        k = min(k0, nbs)
        while len(todo):
            dd, jj = bs_tree.query(wrap(pts[todo], self.side), k=k)
            dd = np.reshape(dd, (len(todo), k))
            jj = np.reshape(jj, (len(todo), k))
            # test all new candidate columns in one batch
            cols = k - done_cols
            ok = self.clear(np.repeat(pts[todo], cols, axis=0),
                            bs.points[jj[:, done_cols:].ravel()], a_outdoor=True)
            ok = ok.reshape(len(todo), cols)
            found = ok.any(axis=1)
            first = done_cols + np.argmax(ok, axis=1)
            hit = np.flatnonzero(found)
            idx[todo[hit]] = jj[hit, first[hit]]
            dist[todo[hit]] = dd[hit, first[hit]]
            open_rows = ~found
            if k >= nbs:
                break
            todo = todo[open_rows]
            done_cols = k
            k = min(4 * k, nbs)
        # report distances in the same metric as torus_distance (not the tree's rounding)
        found = idx >= 0
        dist[found] = torus_distance(pts[found], bs.points[idx[found]], self.side)
        return idx, dist


def dump_deployment(dep: Deployment, directory) -> None:
    """Write ``points.csv`` (kind,x,y) and ``disks.csv`` (x,y,r)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "points.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "x", "y"])
        for ps in (dep.mm_bs, dep.mu_bs, dep.users):
            for x, y in ps.points:
                w.writerow([ps.kind, repr(float(x)), repr(float(y))])
    with open(directory / "disks.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "r"])
        for x, y in dep.disks.centers:
            w.writerow([repr(float(x)), repr(float(y)), repr(dep.disks.radius)])
