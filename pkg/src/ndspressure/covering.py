"""Separated and spanning sets, and greedy disjoint subfamilies of balls.

Disjointness and coverage are decided on a finite ``domain`` (normally the
level carrier): two balls are disjoint when no domain point lies in both.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BowenBallSpec, NDSystem, bowen_matrix, orbit


@dataclass(frozen=True, eq=False)
class BallFamily:
    """Bowen balls B_{n_i}(x_i, eps) at level k, mixed depths allowed."""

    centers: np.ndarray
    depths: np.ndarray
    eps: float
    k: int = 0
    closed: bool = False

    def __post_init__(self):
        depths = np.asarray(self.depths, dtype=int)
        if np.any(depths < 1):
            raise ValueError("depths must be >= 1")
        object.__setattr__(self, "depths", depths)

    def __len__(self) -> int:
        return len(self.depths)

    def specs(self) -> list[BowenBallSpec]:
        return [BowenBallSpec(self.k, c, int(n), self.eps, self.closed) for c, n in zip(self.centers, self.depths)]

    def membership(self, sys: NDSystem, domain, eps: float | None = None) -> np.ndarray:
        """(balls, domain) boolean matrix; ``eps`` overrides the common radius."""
        return _membership(sys, self.k, self.centers, self.depths, eps if eps is not None else self.eps,
                           domain, self.closed)


def _membership(sys, k, centers, depths, radii, domain, closed) -> np.ndarray:
    lev = sys.level(k)
    centers = lev.as_set(centers)
    domain = lev.as_set(domain)
    radii = np.broadcast_to(np.asarray(radii, dtype=float), (len(centers),))
    out = np.zeros((len(centers), len(domain)), dtype=bool)
    top = int(np.max(depths))
    odom = orbit(sys, k, top, domain)
    for n in np.unique(depths):
        rows = np.nonzero(depths == n)[0]
        d = bowen_matrix(sys, k, int(n), centers[rows], domain, orbit_points=odom[:n])
        r = radii[rows][:, None]
        out[rows] = d <= r if closed else d < r
    return out


class _DistanceOracle:
    """Bowen distances from single points of Z to all of Z, with the orbit of Z cached."""

    def __init__(self, sys: NDSystem, Z, n: int, k: int = 0):
        self.sys, self.n, self.k = sys, n, k
        self.Z = sys.level(k).as_set(Z)
        self.orb = orbit(sys, k, n, self.Z)

    def row(self, i: int) -> np.ndarray:
        d = None
        for j in range(self.n):
            lev = self.sys.level(self.k + j)
            dj = lev.pairwise(self.orb[j][i], self.orb[j])[0]
            d = dj if d is None else np.maximum(d, dj)
        return d


def separated_indices(sys: NDSystem, Z, n: int, eps: float, k: int = 0) -> np.ndarray:
    """Greedy maximal (n, eps)-separated subset of Z, scanned in the order of Z.

    Every point of Z ends within distance < eps of a chosen point.
    """
    oracle = _DistanceOracle(sys, Z, n, k)
    mind = np.full(len(oracle.Z), np.inf)
    chosen = []
    for i in range(len(oracle.Z)):
        if mind[i] >= eps:
            chosen.append(i)
            np.minimum(mind, oracle.row(i), out=mind)
    return np.asarray(chosen, dtype=int)


def separated_set(sys: NDSystem, Z, n: int, eps: float, k: int = 0) -> np.ndarray:
    Z = sys.level(k).as_set(Z)
    return Z[separated_indices(sys, Z, n, eps, k)]


def spanning_indices(sys: NDSystem, Z, n: int, eps: float, k: int = 0) -> np.ndarray:
    """Greedy set whose open (n, eps)-balls cover Z, then redundant centres pruned in reverse order."""
    oracle = _DistanceOracle(sys, Z, n, k)
    mind = np.full(len(oracle.Z), np.inf)
    chosen, covers = [], []
    for i in range(len(oracle.Z)):
        if mind[i] >= eps:
            d = oracle.row(i)
            chosen.append(i)
            covers.append(np.nonzero(d < eps)[0])
            np.minimum(mind, d, out=mind)
    count = np.zeros(len(oracle.Z), dtype=int)
    for c in covers:
        count[c] += 1
    keep = np.ones(len(chosen), dtype=bool)
    for t in range(len(chosen) - 1, -1, -1):
        if np.all(count[covers[t]] >= 2):
            keep[t] = False
            count[covers[t]] -= 1
    return np.asarray(chosen, dtype=int)[keep]


def spanning_set(sys: NDSystem, Z, n: int, eps: float, k: int = 0) -> np.ndarray:
    Z = sys.level(k).as_set(Z)
    return Z[spanning_indices(sys, Z, n, eps, k)]


# ---------------------------------------------------------------------------
# disjoint subfamilies


def _greedy_disjoint(member: np.ndarray, order: np.ndarray) -> np.ndarray:
    taken = np.zeros(member.shape[1], dtype=bool)
    picked = []
    for i in order:
        if not np.any(member[i] & taken):
            picked.append(int(i))
            taken |= member[i]
    return np.asarray(picked, dtype=int)


def disjoint_subfamily_5r(sys: NDSystem, centers, radii, n: int, domain, k: int = 0) -> np.ndarray:
    """Indices of pairwise disjoint balls B(x_i, r_i) in d_{k,n}, largest radius first.

    Every input ball is contained in the union of the selected B(x_i, 5 r_i).
    """
    radii = np.asarray(radii, dtype=float)
    depths = np.full(len(radii), n)
    member = _membership(sys, k, centers, depths, radii, domain, closed=False)
    order = np.argsort(-radii, kind="stable")
    return _greedy_disjoint(member, order)


def disjoint_subfamily_bowen_3eps(sys: NDSystem, family: BallFamily, domain) -> np.ndarray:
    """Indices of pairwise disjoint balls of a common-radius family, smallest depth first.

    Every input ball lies in the union of B_{n_i}(x_i, 3 eps) over the selected
    balls (same depths as selected).
    """
    member = family.membership(sys, domain)
    order = np.argsort(family.depths, kind="stable")
    return _greedy_disjoint(member, order)
