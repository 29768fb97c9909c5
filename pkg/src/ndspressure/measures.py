"""Measures on level 0 and their local entropy / pressure exponents.

Two representations: finitely many weighted atoms, or a Bernoulli product
measure on a full nonautonomous shift.  Local exponents are

    v_n(x) = (-log mu(B_n(x, eps)) + S_n f(x)) / n

and their liminf / limsup are approximated by the min / max over a tail
window of depths.  ``log 0 = -inf`` makes v_n = +inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .core import (
    BowenBallSpec,
    NDSystem,
    PotentialSeq,
    SpaceBackend,
    birkhoff_profile,
    bowen_matrix,
    bowen_profile,
    cylinder_length,
)
from .lp import fractional_cover, packing_simplex


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or len(w) != len(self.points):
            raise ValueError("one weight per atom")
        if np.any(w <= 0):
            raise ValueError("atom weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"atom weights sum to {w.sum()}, not 1")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "points", np.asarray(self.points))

    @classmethod
    def dirac(cls, x) -> "AtomicMeasure":
        return cls(points=np.asarray(x)[None, ...], weights=np.ones(1))

    @classmethod
    def uniform(cls, points) -> "AtomicMeasure":
        points = np.asarray(points)
        return cls(points=points, weights=np.full(len(points), 1.0 / len(points)))

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())


@dataclass(frozen=True, eq=False)
class BernoulliMeasure:
    """Product measure: a level-0 word a has cylinder mass prod_k probs[k][a_k]."""

    probs: tuple[np.ndarray, ...]

    def __post_init__(self):
        for k, p in enumerate(self.probs):
            if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
                raise ValueError(f"level {k} probability vector is not stochastic")

    @cached_property
    def log_table(self) -> np.ndarray:
        """(levels, max alphabet) table of log p_k(a), -inf where p_k(a) = 0 or a is out of range."""
        width = max(len(p) for p in self.probs)
        out = np.full((len(self.probs), width), -np.inf)
        for k, p in enumerate(self.probs):
            with np.errstate(divide="ignore"):
                out[k, :len(p)] = np.log(p)
        return out

    def cylinder_mass(self, word: Sequence[int], k: int = 0) -> float:
        word = list(word)
        return float(math.prod(self.probs[k + j][a] for j, a in enumerate(word)))

    def sample(self, count: int, length: int, rng: np.random.Generator) -> np.ndarray:
        u = rng.random((count, length))
        out = np.empty((count, length), dtype=np.int64)
        for j in range(length):
            cdf = np.cumsum(self.probs[j])
            cdf[-1] = 1.0
            out[:, j] = np.searchsorted(cdf, u[:, j], side="right")
        return out

    @property
    def total_mass(self) -> float:
        return 1.0


MeasureRep = AtomicMeasure | BernoulliMeasure


def ball_mass(mu: MeasureRep, sys: NDSystem, spec: BowenBallSpec) -> float:
    if isinstance(mu, BernoulliMeasure):
        if sys.shift is None:
            raise TypeError("Bernoulli measures live on full shifts")
        c = cylinder_length(spec.n, spec.eps, spec.closed)
        center = np.asarray(spec.center)
        return mu.cylinder_mass(center[:min(c, len(center))], spec.k)
    d = bowen_matrix(sys, spec.k, spec.n, spec.center, mu.points)[0]
    inside = d <= spec.eps if spec.closed else d < spec.eps
    return float(mu.weights[inside].sum())


# ---------------------------------------------------------------------------
# local exponents


@dataclass(frozen=True)
class LocalExponentReport:
    x: np.ndarray
    eps: float
    depths: np.ndarray
    values: np.ndarray
    lower: float
    upper: float


def tail_window(n_max: int, ratio: float = 0.5) -> tuple[int, int]:
    return max(1, int(math.floor(n_max * ratio))), n_max


def _depth_sums(sys: NDSystem, f: PotentialSeq | None, pts: np.ndarray, n_max: int) -> np.ndarray:
    """Row i, column n-1 holds S_n f(pts[i])."""
    if f is None:
        return np.zeros((len(pts), n_max))
    if sys.shift is not None and f.symbol_local:
        width = max(sys.shift.sizes[:n_max])
        table = np.zeros((n_max, width))
        for j in range(n_max):
            m = sys.shift.sizes[j]
            table[j, :m] = f.table(j, m)
        return np.cumsum(table[np.arange(n_max)[None, :], pts[:, :n_max]], axis=1)
    return birkhoff_profile(sys, f, 0, n_max, pts).T


def _cylinder_lengths(n_max: int, eps: float, closed: bool) -> np.ndarray:
    return np.array([cylinder_length(n, eps, closed) for n in range(1, n_max + 1)])


def _log_ball_masses(mu: MeasureRep, sys: NDSystem, pts: np.ndarray, eps: float, n_max: int,
                     closed: bool) -> np.ndarray:
    """Row i, column n-1 holds log mu(B_n(pts[i], eps))."""
    if isinstance(mu, BernoulliMeasure):
        if sys.shift is None:
            raise TypeError("Bernoulli measures live on full shifts")
        L = pts.shape[1]
        cum = np.cumsum(mu.log_table[np.arange(L)[None, :], pts], axis=1)
        c = np.minimum(_cylinder_lengths(n_max, eps, closed), L)
        out = cum[:, np.maximum(c - 1, 0)]
        out[:, c == 0] = 0.0
        return out
    out = np.empty((len(pts), n_max))
    for i, x in enumerate(pts):
        rows = bowen_profile(sys, 0, n_max, x, mu.points)
        inside = rows <= eps if closed else rows < eps
        with np.errstate(divide="ignore"):
            out[i] = np.log(inside.astype(float) @ mu.weights)
    return out


def _exponent_rows(mu, sys, f, pts, eps, n_max, closed) -> np.ndarray:
    logm = _log_ball_masses(mu, sys, pts, eps, n_max, closed)
    sums = _depth_sums(sys, f, pts, n_max)
    return (-logm + sums) / np.arange(1, n_max + 1)


def local_exponents(mu: MeasureRep, sys: NDSystem, f: PotentialSeq | None, x, eps: float, n_max: int,
                    n_min: int | None = None, closed: bool = False, window: float = 0.5) -> LocalExponentReport:
    """Per-depth exponents v_n at x and their tail min / max over [n_min, n_max]."""
    if n_min is None:
        n_min = tail_window(n_max, window)[0]
    if not 1 <= n_min <= n_max:
        raise ValueError("need 1 <= n_min <= n_max")
    pts = sys.level(0).as_set(x)
    values = _exponent_rows(mu, sys, f, pts, eps, n_max, closed)[0]
    depths = np.arange(1, n_max + 1)
    tail = values[n_min - 1:]
    return LocalExponentReport(x=np.asarray(x), eps=eps, depths=depths, values=values,
                               lower=float(tail.min()), upper=float(tail.max()))


@dataclass(frozen=True)
class IntegratedReport:
    value: float
    stderr: float
    excluded_mass: float
    samples: int
    eps: float
    which: str


def integrated_exponent(mu: MeasureRep, sys: NDSystem, f: PotentialSeq | None, eps_schedule: Sequence[float],
                        n_max: int, which: str = "lower", n_min: int | None = None, samples: int = 500,
                        rng: np.random.Generator | None = None, closed: bool = False) -> IntegratedReport:
    """mu-average of the lower or upper local exponent at the smallest scheduled eps.

    Atoms are integrated exactly; Bernoulli measures by i.i.d. sampling of
    words (at least 500).  Points with infinite exponent are left out and
    their mass is reported.
    """
    if which not in ("lower", "upper"):
        raise ValueError("which must be 'lower' or 'upper'")
    eps = min(eps_schedule)
    if isinstance(mu, BernoulliMeasure):
        rng = rng if rng is not None else np.random.default_rng(0)
        samples = max(samples, 500)
        length = max(cylinder_length(n_max, eps, closed), n_max)
        if sys.shift is not None:
            length = min(length, sys.shift.depth)
        pts = mu.sample(samples, length, rng)
        wts = np.full(samples, 1.0 / samples)
    else:
        pts, wts = mu.points, mu.weights
    if n_min is None:
        n_min = tail_window(n_max)[0]
    pts = sys.level(0).as_set(pts)
    vals = np.empty(len(pts))
    for start in range(0, len(pts), 64):
        rows = _exponent_rows(mu, sys, f, pts[start:start + 64], eps, n_max, closed)[:, n_min - 1:]
        vals[start:start + 64] = rows.min(axis=1) if which == "lower" else rows.max(axis=1)
    ok = np.isfinite(vals)
    excluded = float(wts[~ok].sum())
    if not ok.any():
        return IntegratedReport(math.inf, 0.0, excluded, len(pts), eps, which)
    w = wts[ok] / wts[ok].sum()
    mean = float(w @ vals[ok])
    if isinstance(mu, BernoulliMeasure):
        stderr = float(np.std(vals[ok], ddof=1) / math.sqrt(ok.sum())) if ok.sum() > 1 else 0.0
    else:
        stderr = 0.0
    return IntegratedReport(mean, stderr, excluded, len(pts), eps, which)


# ---------------------------------------------------------------------------
# pushforward


def _merge_atoms(points: np.ndarray, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    axis = 0 if points.ndim > 1 else None
    uniq, inv = np.unique(points, axis=axis, return_inverse=True)
    merged = np.bincount(inv.ravel(), weights=weights, minlength=len(uniq))
    return uniq, merged


def pushforward(pi, mu: MeasureRep, codomain: SpaceBackend | None = None) -> MeasureRep:
    """Image measure nu = mu o pi^{-1}.

    For atoms ``pi`` is a level-0 map on point sets and coinciding images
    merge.  For Bernoulli measures ``pi`` must be a level-wise symbol
    relabelling (anything with ``table(k)``), which maps product measures to
    product measures.
    """
    if isinstance(mu, BernoulliMeasure):
        if not hasattr(pi, "table"):
            raise TypeError("Bernoulli pushforward needs a symbol relabelling")
        probs = []
        for k, p in enumerate(mu.probs):
            perm = np.asarray(pi.table(k))
            q = np.empty_like(p)
            q[perm] = p
            probs.append(q)
        return BernoulliMeasure(probs=tuple(probs))
    img = np.asarray(pi(mu.points))
    if codomain is not None:
        carrier = codomain.as_set(codomain.points)
        if codomain.point_ndim == 0:
            tol = max(codomain.spacing * 1e-6, 1e-12)
            idx = np.clip(np.searchsorted(carrier, img), 0, len(carrier) - 1)
            near = np.minimum(np.abs(carrier[idx] - img), np.abs(carrier[np.maximum(idx - 1, 0)] - img))
            if np.any(near > tol):
                raise ValueError("image point outside the codomain carrier")
        else:
            known = {tuple(row) for row in carrier}
            if any(tuple(row) not in known for row in img):
                raise ValueError("image point outside the codomain carrier")
    pts, w = _merge_atoms(img, mu.weights)
    w = w / w.sum()
    return AtomicMeasure(points=pts, weights=w)


# ---------------------------------------------------------------------------
# finite Frostman dual


class DegenerateCover(ValueError):
    """The weighted cover value vanishes; no Frostman measure is claimed."""


@dataclass(frozen=True)
class FrostmanCertificate:
    cover_value: float
    dual_value: float
    gap: float
    bounds: np.ndarray
    masses: np.ndarray
    satisfied: bool
    extra: dict = field(default_factory=dict)


def frostman_dual(sys: NDSystem, f: PotentialSeq | None, Z, s: float, N: int, eps: float, n_max: int | None = None,
                  centers: str = "net", family=None) -> tuple[AtomicMeasure, FrostmanCertificate]:
    """Frostman-type measure on Z for the candidate family of the weighted cover value at (s, N, eps)."""
    from .pressure import build_family

    n_top = N if n_max is None else n_max
    fam = family if family is not None else build_family(sys, f, Z, N, n_top, eps, centers=centers)
    logw = fam.log_weights(s, "sup")
    top = float(np.max(logw))
    measure, cert = frostman_from_family(fam.dense(), np.exp(logw - top), fam.Z)
    scale = math.exp(top)
    cert = FrostmanCertificate(cover_value=cert.cover_value * scale, dual_value=cert.dual_value * scale,
                               gap=cert.gap * scale, bounds=cert.bounds, masses=cert.masses,
                               satisfied=cert.satisfied, extra=cert.extra)
    return measure, cert


def frostman_from_family(member: np.ndarray, weights: np.ndarray,
                         points: np.ndarray) -> tuple[AtomicMeasure, FrostmanCertificate]:
    """Probability measure on ``points`` with nu(B_i) <= w_i / D for every candidate ball.

    ``member`` is the (balls, points) membership matrix and ``weights`` the
    sup-over-ball weights.  The packing LP (max mu(Z) s.t. mu(B_i) <= w_i) is
    solved by the in-house simplex; its optimum D is compared with the
    fractional cover value C from HiGHS.
    """
    member = np.asarray(member, dtype=bool)
    weights = np.asarray(weights, dtype=float)
    if not np.max(weights, initial=0.0) > 0:
        raise DegenerateCover("all ball weights vanish")
    C = fractional_cover(member, weights).value
    if not C > 0:
        raise DegenerateCover("weighted cover value is zero")
    mu = packing_simplex(member, weights).x
    load = member.astype(float) @ mu
    ratio = float(np.max(load / weights))
    if ratio > 1.0:
        mu = mu / ratio
    D = float(mu.sum())
    if not D > 0:
        raise DegenerateCover("packing LP returned the zero measure")
    nu = mu / D
    keep = nu > 0
    masses = member.astype(float) @ nu
    # lower D by ulps until every bound w_i / D dominates its mass in floating point
    hit = masses > 0
    D = min(D, float(np.min(weights[hit] / masses[hit])))
    bounds = weights / D
    while np.any(masses > bounds):
        D = float(np.nextafter(D, 0.0))
        bounds = weights / D
    ok = bool(np.all(masses <= bounds))
    measure = AtomicMeasure(points=np.asarray(points)[keep], weights=nu[keep] / nu[keep].sum())
    cert = FrostmanCertificate(cover_value=C, dual_value=D, gap=abs(C - D), bounds=bounds, masses=masses,
                               satisfied=ok, extra={"atom_weights": nu})
    return measure, cert
