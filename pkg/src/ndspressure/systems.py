"""Built-in nonautonomous systems with known entropies.

* full nonautonomous shifts over alphabets of sizes m_0, m_1, ...
* the doubling chain T_k(x) = 2x on I_k = [0, 2^k] under three metrics
* repellers of nonautonomous interval IFSs with affine, disjoint branches
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import NDSystem, SpaceBackend, symbolic_metric
from .measures import BernoulliMeasure


class OverlapError(ValueError):
    """Branch images of an IFS level intersect (or sit closer than the grid gap)."""


# ---------------------------------------------------------------------------
# shifts


@dataclass(frozen=True)
class ShiftSpec:
    """Alphabet sizes m_k of a full nonautonomous shift, truncated at word depth ``depth``."""

    sizes: tuple[int, ...]
    depth: int

    def __post_init__(self):
        if any(m < 2 for m in self.sizes):
            raise ValueError("alphabet sizes must be >= 2")
        if not 0 <= self.depth <= len(self.sizes):
            raise ValueError(f"depth {self.depth} exceeds the {len(self.sizes)} listed alphabet sizes")

    @classmethod
    def periodic(cls, pattern: Sequence[int], depth: int) -> "ShiftSpec":
        pattern = tuple(int(m) for m in pattern)
        sizes = tuple(pattern[k % len(pattern)] for k in range(depth))
        return cls(sizes, depth)

    @classmethod
    def blocks(cls, values: Sequence[int], depth: int, base: int = 2) -> "ShiftSpec":
        """Block i (length base**i) repeats ``values[i % len(values)]``."""
        sizes: list[int] = []
        i = 0
        while len(sizes) < depth:
            sizes.extend([int(values[i % len(values)])] * base ** i)
            i += 1
        return cls(tuple(sizes[:depth]), depth)

    def log_sizes(self) -> np.ndarray:
        return np.log(np.asarray(self.sizes, dtype=float))

    def count(self, k: int, length: int) -> int:
        return math.prod(self.sizes[k:k + length])


def _words(sizes: Sequence[int]) -> np.ndarray:
    """All words over the given alphabets in lexicographic order."""
    sizes = list(sizes)
    total = math.prod(sizes)
    out = np.empty((total, len(sizes)), dtype=np.int64)
    code = np.arange(total)
    for j in range(len(sizes) - 1, -1, -1):
        out[:, j] = code % sizes[j]
        code //= sizes[j]
    return out


def make_na_shift(spec: ShiftSpec, label: str | None = None) -> NDSystem:
    """Full nonautonomous shift; level k holds words of length depth - k, the map drops a symbol."""
    L = spec.depth

    def level(k: int) -> SpaceBackend:
        sizes = spec.sizes[k:L]
        return SpaceBackend(
            kind="symbolic",
            metric=symbolic_metric,
            carrier=lambda: _words(sizes),
            diameter=1.0,
            # beyond 2^62 words the carrier is never enumerated; the hint only has to be large
            size_hint=math.prod(sizes) if sum(math.log2(m) for m in sizes) <= 62 else 2 ** 62,
        )

    def step(k: int, words: np.ndarray) -> np.ndarray:
        return np.asarray(words)[..., 1:]

    name = label or f"shift{list(spec.sizes[:6])}{'...' if len(spec.sizes) > 6 else ''}/L={L}"
    return NDSystem(level_factory=level, step=step, label=name, max_level=L, shift=spec)


def bernoulli_measure(spec: ShiftSpec, probs) -> BernoulliMeasure:
    """Product measure with cylinder masses prod_k p_k(a_k).

    ``probs`` is a sequence of per-level vectors (repeated periodically over
    the listed levels) or a callable ``k -> vector``.
    """
    if callable(probs):
        vecs = [np.asarray(probs(k), dtype=float) for k in range(len(spec.sizes))]
    else:
        base = [np.asarray(p, dtype=float) for p in probs]
        vecs = [base[k % len(base)] for k in range(len(spec.sizes))]
    for k, (p, m) in enumerate(zip(vecs, spec.sizes)):
        if p.shape != (m,):
            raise ValueError(f"level {k}: probability vector of length {len(p)} for alphabet of size {m}")
    return BernoulliMeasure(probs=tuple(vecs))


def uniform_bernoulli(spec: ShiftSpec) -> BernoulliMeasure:
    return bernoulli_measure(spec, lambda k: np.full(spec.sizes[k], 1.0 / spec.sizes[k]))


def tilted_bernoulli(spec: ShiftSpec, p: float) -> BernoulliMeasure:
    """Symbol 0 gets mass p at every level, the rest share 1 - p equally."""

    def vec(k):
        m = spec.sizes[k]
        return np.concatenate([[p], np.full(m - 1, (1 - p) / (m - 1))])

    return bernoulli_measure(spec, vec)


@dataclass(frozen=True)
class SymbolPermutation:
    """Level-wise relabelling of a full shift onto itself: position j of a level-k word uses perm(k + j)."""

    perms: Callable[[int], np.ndarray]

    def level_map(self, k: int, words: np.ndarray) -> np.ndarray:
        words = np.asarray(words)
        out = np.empty_like(words)
        for j in range(words.shape[-1]):
            out[..., j] = np.asarray(self.perms(k + j))[words[..., j]]
        return out

    def inverse_map(self, k: int, words: np.ndarray) -> np.ndarray:
        words = np.asarray(words)
        out = np.empty_like(words)
        for j in range(words.shape[-1]):
            out[..., j] = np.argsort(self.perms(k + j))[words[..., j]]
        return out

    def table(self, k: int) -> np.ndarray:
        return np.asarray(self.perms(k))


# ---------------------------------------------------------------------------
# doubling chain

METRIC_KINDS = ("euclidean", "scaled", "bounded")


@dataclass(frozen=True)
class DoublingChainSpec:
    """T_k(x) = 2x from [0, 2^k] to [0, 2^{k+1}].

    Level k is a grid of spacing ``delta * 2^k`` (``delta`` on the [0, 1]
    scale), so the doubling map sends grid points to grid points.
    """

    metric_kind: str = "euclidean"
    delta: float = 1e-4
    max_level: int | None = None

    def __post_init__(self):
        if self.metric_kind not in METRIC_KINDS:
            raise ValueError(f"metric_kind must be one of {METRIC_KINDS}")
        if not 0 < self.delta <= 1:
            raise ValueError("grid spacing must lie in (0, 1]")


def doubling_metric(kind: str, k: int):
    scale = math.ldexp(1.0, -k)
    if kind == "euclidean":
        return lambda a, b: np.abs(a - b)
    if kind == "scaled":
        return lambda a, b: np.abs(a - b) * scale
    if kind == "bounded":
        return lambda a, b: np.abs(a - b) / (1.0 + np.abs(a - b))
    raise ValueError(kind)


def make_doubling_chain(spec: DoublingChainSpec, label: str | None = None) -> NDSystem:
    cells = int(round(1.0 / spec.delta))

    def level(k: int) -> SpaceBackend:
        width = math.ldexp(1.0, k)
        h = spec.delta * width
        diam = {"euclidean": width, "scaled": 1.0, "bounded": width / (1 + width)}[spec.metric_kind]
        return SpaceBackend(
            kind="interval",
            metric=doubling_metric(spec.metric_kind, k),
            carrier=lambda: np.arange(cells + 1) * h,
            spacing=h,
            diameter=diam,
            size_hint=cells + 1,
        )

    def step(k: int, x: np.ndarray) -> np.ndarray:
        nxt = level_cache(k + 1)
        return nxt.snap(2.0 * np.asarray(x, dtype=float))

    # 2 * (i h) = i (2h): grid points land exactly on grid points
    sys = NDSystem(level_factory=level, step=step, label=label or f"doubling/{spec.metric_kind}",
                   max_level=spec.max_level, exact_grid=True)
    level_cache = sys.level
    return sys


# ---------------------------------------------------------------------------
# nonautonomous IFS repellers


@dataclass(frozen=True)
class NIFSSpec:
    """Affine contractions S_{k,i}(x) = r x + a of [0, 1], listed per level k = 1, 2, ...

    ``levels[j]`` holds the (ratio, offset) pairs of level j + 1; the list is
    repeated periodically up to the net depth.
    """

    levels: tuple[tuple[tuple[float, float], ...], ...]
    depth: int = 10
    gap: float = 1e-9

    def maps(self, k: int) -> tuple[tuple[float, float], ...]:
        """Contractions of level k >= 1, sorted by offset."""
        return tuple(sorted(self.levels[(k - 1) % len(self.levels)], key=lambda ra: ra[1]))

    def validate(self) -> None:
        for j in range(len(self.levels)):
            maps = self.maps(j + 1)
            if not maps:
                raise ValueError(f"level {j + 1} has no contractions")
            for r, a in maps:
                if not 0 < r < 1:
                    raise ValueError(f"ratio {r} not in (0, 1)")
                if a < -1e-12 or a + r > 1 + 1e-12:
                    raise ValueError(f"image [{a}, {a + r}] leaves [0, 1]")
            for (r0, a0), (r1, a1) in zip(maps, maps[1:]):
                if a1 - (a0 + r0) < self.gap:
                    raise OverlapError(f"level {j + 1}: images [{a0}, {a0 + r0}] and [{a1}, {a1 + r1}] overlap")


@dataclass(frozen=True)
class AttractorNet:
    points: np.ndarray
    resolution: float


def middle_third(depth: int = 10) -> NIFSSpec:
    return NIFSSpec(levels=(((1 / 3, 0.0), (1 / 3, 2 / 3)),), depth=depth)


def make_nifs_repeller(spec: NIFSSpec, label: str | None = None) -> tuple[NDSystem, AttractorNet]:
    """Repeller system of a NIFS and a net of its attractor.

    Level k carries the points S_{k+1,i_{k+1}} o ... o S_{p,i_p}(0) for all
    branch words (p = net depth); T_k is the inverse branch of level k + 1.
    """
    spec.validate()
    p = spec.depth
    carriers: list[np.ndarray] = [np.zeros(0)] * (p + 1)
    carriers[p] = np.zeros(1)
    for k in range(p - 1, -1, -1):
        inner = carriers[k + 1]
        carriers[k] = np.concatenate([r * inner + a for r, a in spec.maps(k + 1)])

    def level(k: int) -> SpaceBackend:
        pts = carriers[k]
        return SpaceBackend(kind="interval", metric=lambda a, b: np.abs(a - b), carrier=pts,
                            diameter=float(pts[-1] - pts[0]) if len(pts) > 1 else 0.0)

    def step(k: int, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        maps = spec.maps(k + 1)
        starts = np.array([a for _, a in maps])
        ratios = np.array([r for r, _ in maps])
        branch = np.clip(np.searchsorted(starts, x, side="right") - 1, 0, len(maps) - 1)
        y = (x - starts[branch]) / ratios[branch]
        tgt = carriers[k + 1]
        idx = np.clip(np.searchsorted(tgt, y), 1, len(tgt) - 1) if len(tgt) > 1 else np.zeros_like(y, dtype=int)
        if len(tgt) > 1:
            left = tgt[idx - 1]
            idx = np.where(np.abs(y - left) <= np.abs(tgt[idx] - y), idx - 1, idx)
        return tgt[idx]

    resolution = math.prod(max(r for r, _ in spec.maps(k)) for k in range(1, p + 1))
    sys = NDSystem(level_factory=level, step=step, label=label or "nifs", max_level=p)
    return sys, AttractorNet(points=carriers[0], resolution=resolution)


def box_counting_dimension(points: np.ndarray, scales: Sequence[float]) -> float:
    """Least-squares slope of log N(r) against log(1/r) for occupied grid boxes of side r."""
    points = np.asarray(points, dtype=float)
    counts = [len(np.unique(np.floor(points / r + 1e-9))) for r in scales]
    slope, _ = np.polyfit(np.log(1 / np.asarray(scales)), np.log(counts), 1)
    return float(slope)
