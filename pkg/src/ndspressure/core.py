"""Nonautonomous systems on finite carriers: Bowen metrics, Bowen balls, Birkhoff sums.

Points are numpy arrays.  On an ``interval`` backend a point is a float and a
point set is a 1-D array; on ``symbolic`` and ``cloud`` backends a point is a
1-D array (a word, or coordinates) and a point set is a 2-D array whose rows
are points.  All pairwise routines broadcast over the leading axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

Metric = Callable[[np.ndarray, np.ndarray], np.ndarray]

KINDS = ("symbolic", "interval", "cloud")

# chunk size for pairwise distance matrices (rows of centres per block)
_CHUNK = 256


class LevelOutOfRange(IndexError):
    """Requested level lies beyond the truncation of the system."""


@dataclass(frozen=True, eq=False)
class SpaceBackend:
    """A finite compact metric space standing in for one level X_k.

    ``carrier`` is either an array of points or a zero-argument callable that
    builds one; callables are evaluated at most once.
    """

    kind: str
    metric: Metric
    carrier: np.ndarray | Callable[[], np.ndarray]
    spacing: float = 0.0
    diameter: float = math.inf
    size_hint: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown backend kind {self.kind!r}")

    @cached_property
    def points(self) -> np.ndarray:
        pts = self.carrier() if callable(self.carrier) else self.carrier
        pts = np.asarray(pts)
        if len(pts) == 0:
            raise ValueError("carrier must be non-empty")
        return pts

    @property
    def point_ndim(self) -> int:
        return 0 if self.kind == "interval" else 1

    def __len__(self) -> int:
        if self.size_hint is not None and "points" not in self.__dict__:
            return self.size_hint
        return len(self.points)

    def as_set(self, x) -> np.ndarray:
        """Coerce a point or a point set to a point set (leading axis)."""
        x = np.asarray(x)
        if x.ndim == self.point_ndim:
            return x[None, ...]
        return x

    def pairwise(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a, b = self.as_set(a), self.as_set(b)
        if self.point_ndim == 0:
            return self.metric(a[:, None], b[None, :])
        return self.metric(a[:, None, :], b[None, :, :])

    def snap(self, x: np.ndarray) -> np.ndarray:
        """Nearest carrier point (grids only; other kinds return ``x``)."""
        if self.kind != "interval" or self.spacing <= 0:
            return x
        lo = float(self.points[0])
        hi = float(self.points[-1])
        return np.clip(lo + np.round((np.asarray(x) - lo) / self.spacing) * self.spacing, lo, hi)


@dataclass(frozen=True, eq=False)
class NDSystem:
    """Sequence of level backends with maps ``step(k, points_at_k) -> points_at_k+1``.

    ``max_level`` is the last level the generator can produce (``None`` for
    unbounded).  ``shift`` holds the alphabet description of full
    nonautonomous shifts, which enables exact cylinder computations.
    """

    level_factory: Callable[[int], SpaceBackend]
    step: Callable[[int, np.ndarray], np.ndarray]
    label: str = ""
    max_level: int | None = None
    shift: object | None = None
    exact_grid: bool = False
    _levels: dict = field(default_factory=dict, repr=False)

    def level(self, k: int) -> SpaceBackend:
        if k < 0 or (self.max_level is not None and k > self.max_level):
            raise LevelOutOfRange(f"{self.label}: level {k} not available (max {self.max_level})")
        if k not in self._levels:
            self._levels[k] = self.level_factory(k)
        return self._levels[k]

    @property
    def is_symbolic(self) -> bool:
        return self.level(0).kind == "symbolic"

    def slack(self, k: int, j: int) -> float:
        """Bound on the accumulated snapping error of j applications starting at level k.

        Zero when the maps send grid points exactly onto grid points.
        """
        if self.exact_grid:
            return 0.0
        return float(sum(0.5 * self.level(k + i + 1).spacing for i in range(j)))


@dataclass(frozen=True)
class BowenBallSpec:
    k: int
    center: np.ndarray
    n: int
    eps: float
    closed: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("Bowen ball depth must be >= 1")
        if not self.eps > 0:
            raise ValueError("Bowen ball radius must be positive")


@dataclass(frozen=True)
class PotentialSeq:
    """Potential sequence f = (f_k).

    ``funcs(k, points)`` evaluates f_k on a point set of level k.  Optional
    structure: ``level_values(k)`` when each f_k is constant, ``symbol_values(k)``
    when f_k depends only on the current symbol of a word.
    """

    funcs: Callable[[int, np.ndarray], np.ndarray]
    declared_norm: float | str | None = None
    modulus: Callable[[float], float] | None = None
    level_values: Callable[[int], float] | None = None
    symbol_values: Callable[[int], np.ndarray] | None = None
    label: str = ""

    def __call__(self, k: int, points: np.ndarray) -> np.ndarray:
        return np.asarray(self.funcs(k, points), dtype=float)

    @property
    def symbol_local(self) -> bool:
        return self.level_values is not None or self.symbol_values is not None

    def table(self, k: int, m: int) -> np.ndarray:
        """Values of f_k per current symbol (symbolic potentials only)."""
        if self.symbol_values is not None:
            t = np.asarray(self.symbol_values(k), dtype=float)
            if len(t) < m:
                raise ValueError(f"potential table at level {k} has {len(t)} entries, need {m}")
            return t[:m]
        if self.level_values is not None:
            return np.full(m, float(self.level_values(k)))
        raise ValueError("potential is not symbol-local")


def zero_potential() -> PotentialSeq:
    return constant_potential(0.0)


def constant_potential(a: float) -> PotentialSeq:
    a = float(a)

    def funcs(k, pts):
        pts = np.asarray(pts)
        shape = pts.shape[:-1] if pts.ndim >= 2 else pts.shape
        return np.full(shape, a)

    return PotentialSeq(
        funcs=funcs,
        declared_norm=abs(a),
        modulus=lambda eps: math.inf,
        level_values=lambda k: a,
        label=f"const({a:g})",
    )


def level_potential(values: Callable[[int], float], label: str = "level") -> PotentialSeq:
    """f_k constant on each level, equal to ``values(k)``."""

    def funcs(k, pts):
        pts = np.asarray(pts)
        shape = pts.shape[:-1] if pts.ndim >= 2 else pts.shape
        return np.full(shape, float(values(k)))

    return PotentialSeq(funcs=funcs, modulus=lambda eps: math.inf, level_values=values, label=label)


def symbol_potential(table: Callable[[int], Sequence[float]], label: str = "symbol") -> PotentialSeq:
    """f_k(x) = table(k)[x_0] on symbolic levels; locally constant, hence equicontinuous."""

    def funcs(k, words):
        words = np.asarray(words)
        t = np.asarray(table(k), dtype=float)
        return t[words[..., 0]]

    # constant on cylinders of length 1, i.e. on balls of radius <= 1/2
    return PotentialSeq(funcs=funcs, modulus=lambda eps: 0.5, symbol_values=table, label=label)


# ---------------------------------------------------------------------------
# iteration, metrics, balls


def compose(sys: NDSystem, k: int, j: int, x) -> np.ndarray:
    """T_k^j x, with T_k^0 the identity."""
    if j < 0:
        raise ValueError("j must be >= 0")
    if sys.max_level is not None and k + j > sys.max_level:
        raise LevelOutOfRange(f"{sys.label}: cannot reach level {k + j}")
    y = np.asarray(x)
    for i in range(j):
        y = sys.step(k + i, y)
    return y


def orbit(sys: NDSystem, k: int, n: int, x) -> list[np.ndarray]:
    """[T_k^0 x, ..., T_k^{n-1} x]."""
    if sys.max_level is not None and k + n - 1 > sys.max_level:
        raise LevelOutOfRange(f"{sys.label}: cannot reach level {k + n - 1}")
    out = [np.asarray(x)]
    for i in range(n - 1):
        out.append(sys.step(k + i, out[-1]))
    return out


def bowen_distance(sys: NDSystem, k: int, n: int, x, y) -> np.ndarray | float:
    """d_{k,n}(x, y) = max_{j<n} d_{k+j}(T^j x, T^j y); broadcasts like the level metric."""
    if n < 1:
        raise ValueError("n must be >= 1")
    ox, oy = orbit(sys, k, n, x), orbit(sys, k, n, y)
    d = None
    for j in range(n):
        dj = sys.level(k + j).metric(ox[j], oy[j])
        d = dj if d is None else np.maximum(d, dj)
    return float(d) if np.ndim(d) == 0 else d


def bowen_matrix(sys: NDSystem, k: int, n: int, centers, points, orbit_points=None) -> np.ndarray:
    """Matrix of d_{k,n}(centers[i], points[j]).

    ``orbit_points`` may pass a precomputed ``orbit(sys, k, n, points)``.
    """
    lev = sys.level(k)
    centers, points = lev.as_set(centers), lev.as_set(points)
    op = orbit_points if orbit_points is not None else orbit(sys, k, n, points)
    out = np.empty((len(centers), len(points)))
    for start in range(0, len(centers), _CHUNK):
        oc = orbit(sys, k, n, centers[start:start + _CHUNK])
        d = None
        for j in range(n):
            dj = sys.level(k + j).pairwise(oc[j], op[j])
            d = dj if d is None else np.maximum(d, dj, out=d)
        out[start:start + _CHUNK] = d
    return out


def bowen_profile(sys: NDSystem, k: int, n: int, x, points) -> np.ndarray:
    """Row j-1 holds d_{k,j}(x, points) for j = 1..n (running max along the orbit)."""
    lev = sys.level(k)
    points = lev.as_set(points)
    ox = orbit(sys, k, n, x)
    op = orbit(sys, k, n, points)
    rows = np.empty((n, len(points)))
    run = np.zeros(len(points))
    for j in range(n):
        run = np.maximum(run, sys.level(k + j).pairwise(ox[j], op[j])[0])
        rows[j] = run
    return rows


def bowen_ball_points(sys: NDSystem, spec: BowenBallSpec, domain, method: str = "max") -> np.ndarray:
    """Points of ``domain`` in the Bowen ball ``spec``.

    ``method='max'`` thresholds the Bowen metric; ``method='intersection'``
    intersects the pulled-back level balls one iterate at a time.
    """
    lev = sys.level(spec.k)
    domain = lev.as_set(domain)
    inside = np.less_equal if spec.closed else np.less
    if method == "max":
        d = bowen_matrix(sys, spec.k, spec.n, spec.center, domain)[0]
        return domain[inside(d, spec.eps)]
    if method == "intersection":
        keep = np.ones(len(domain), dtype=bool)
        cx, cy = np.asarray(spec.center), domain
        for j in range(spec.n):
            lj = sys.level(spec.k + j)
            keep &= inside(lj.pairwise(cx, cy)[0], spec.eps)
            if j + 1 < spec.n:
                cx, cy = sys.step(spec.k + j, cx), sys.step(spec.k + j, cy)
        return domain[keep]
    raise ValueError(f"unknown method {method!r}")


def birkhoff_sum(sys: NDSystem, f: PotentialSeq, k: int, n: int, x) -> np.ndarray | float:
    """S_{k,n} f(x) = sum_{j<n} f_{k+j}(T_k^j x)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    lev = sys.level(k)
    single = np.ndim(x) == lev.point_ndim
    total = birkhoff_profile(sys, f, k, n, lev.as_set(x))[n - 1]
    return float(total[0]) if single else total


def birkhoff_profile(sys: NDSystem, f: PotentialSeq, k: int, n: int, points) -> np.ndarray:
    """Row j-1 holds S_{k,j} f on ``points`` for j = 1..n."""
    pts = sys.level(k).as_set(points)
    rows = np.empty((n, len(pts)))
    acc = np.zeros(len(pts))
    for j, xj in enumerate(orbit(sys, k, n, pts)):
        acc = acc + f(k + j, xj)
        rows[j] = acc
    return rows


# ---------------------------------------------------------------------------
# norms and moduli

UNBOUNDED = "unbounded"
FAILS = "fails"


def doubling_levels(sys: NDSystem, top: int = 64) -> list[int]:
    levels = [0]
    k = 1
    while k <= top and (sys.max_level is None or k <= sys.max_level):
        levels.append(k)
        k *= 2
    return levels


def _sample(points: np.ndarray, limit: int, rng: np.random.Generator) -> np.ndarray:
    if len(points) <= limit:
        return points
    idx = np.sort(rng.choice(len(points), size=limit, replace=False))
    return points[idx]


def _level_abs_max(sys: NDSystem, f: PotentialSeq, k: int, rng) -> float:
    lev = sys.level(k)
    if sys.shift is not None and f.symbol_local:
        return float(np.max(np.abs(f.table(k, sys.shift.sizes[k]))))
    return float(np.max(np.abs(f(k, _sample(lev.points, 20000, rng)))))


def potential_norm(f: PotentialSeq, sys: NDSystem, levels: Sequence[int] | None = None):
    """sup_k max |f_k| over sampled levels, or ``"unbounded"``.

    A sequence is reported unbounded when declared so, or when the maxima
    along a doubling level schedule keep growing geometrically.
    """
    if f.declared_norm == UNBOUNDED:
        return UNBOUNDED
    levels = list(levels) if levels is not None else doubling_levels(sys)
    rng = np.random.default_rng(0)
    maxima = [_level_abs_max(sys, f, k, rng) for k in levels]
    if len(maxima) >= 5:
        tail = maxima[-4:]
        if all(b > a for a, b in zip(tail, tail[1:])) and tail[-1] >= 2 * maxima[-5] > 0:
            return UNBOUNDED
    sup = max(maxima)
    if isinstance(f.declared_norm, (int, float)) and sup > f.declared_norm + 1e-12:
        raise ValueError(f"sampled |f| = {sup} exceeds declared norm {f.declared_norm}")
    return sup


def _abs_diff(k, a, b):
    return np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))


def modulus_holds(sys: NDSystem, phi: Callable, eps: float, delta: float, levels: Sequence[int],
                  target_metric: Callable = _abs_diff, base_points: int = 256, seed: int = 0) -> bool:
    """Check d_k(x, y) < delta  =>  target(phi_k x, phi_k y) < eps on sampled pairs."""
    rng = np.random.default_rng(seed)
    for k in levels:
        lev = sys.level(k)
        pts = _sample(lev.points, 20000, rng)
        base = _sample(pts, base_points, rng)
        near = lev.pairwise(base, pts) < delta
        if not near.any():
            continue
        ib, ip = np.nonzero(near)
        vb = phi(k, lev.as_set(base)[ib])
        vp = phi(k, lev.as_set(pts)[ip])
        if np.any(target_metric(k, vb, vp) >= eps):
            return False
    return True


def equicontinuity_modulus(sys: NDSystem, phi: Callable, eps: float, levels: Sequence[int] | None = None,
                           target_metric: Callable = _abs_diff, seed: int = 0):
    """Largest dyadic multiple of the grid resolution that works as delta(eps) on all sampled levels.

    ``phi(k, points)`` is the family member at level k (a potential or a map
    into another space measured by ``target_metric(k, a, b)``).  Returns
    ``"fails"`` when no candidate above the resolution works.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    levels = list(levels) if levels is not None else doubling_levels(sys, 16)
    rng = np.random.default_rng(seed)
    resolution = math.inf
    diameter = 0.0
    for k in levels:
        lev = sys.level(k)
        pts = _sample(lev.points, 512, rng)
        d = lev.pairwise(pts, pts)
        pos = d[d > 0]
        if pos.size:
            resolution = min(resolution, float(pos.min()))
            diameter = max(diameter, float(d.max()))
    if not math.isfinite(resolution):
        return math.inf
    # candidates strictly above the resolution so that nearest neighbours are tested
    cands = []
    delta = 2 * resolution
    while delta <= 2 * diameter:
        cands.append(delta)
        delta *= 2
    best = FAILS
    for delta in cands:
        if modulus_holds(sys, phi, eps, delta, levels, target_metric, seed=seed):
            best = delta
        else:
            break
    return best


# ---------------------------------------------------------------------------
# symbolic helpers


def symbolic_metric(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """2^{-first index where the words differ}; 0 for equal words."""
    neq = np.not_equal(a, b)
    if neq.shape[-1] == 0:
        return np.zeros(neq.shape[:-1])
    first = np.argmax(neq, axis=-1)
    return np.where(neq.any(axis=-1), np.ldexp(1.0, -first), 0.0)


def cylinder_length(n: int, eps: float, closed: bool = False) -> int:
    """Length of the cylinder equal to a depth-n Bowen ball of radius eps on a shift.

    With the ultrametric 2^{-first difference}, d_n(x, y) is 1 when the words
    differ before index n and 2^{-(p-n+1)} when they first differ at p >= n.
    """
    if (closed and eps >= 1) or (not closed and eps > 1):
        return 0
    c = n
    # smallest c >= n with 2^{-(c-n+1)} inside the ball
    while True:
        d = math.ldexp(1.0, -(c - n + 1))
        if (d <= eps) if closed else (d < eps):
            return c
        c += 1
