"""Carathéodory cover and packing values, critical exponents, pressure estimators.

Weights of a ball B_n(x, eps) are e^{-n s + S_n f(x)} (``center`` mode) or
e^{-n s + sup_{y in B} S_n f(y)} (``sup`` mode).  All values are carried as
logarithms since the weights span hundreds of orders of magnitude.

Three evaluation routes:

* ``closed-form``: whole full shift with a level-constant potential; every
  cylinder of a given length looks the same, so the optimum uses a single
  depth.
* ``tree``: shifts with a symbol-local potential and eps <= 1; Bowen balls are
  cylinders, cylinders form a tree, and the optimal cover / packing is a
  dynamic programme over it.
* ``family``: anything else.  Candidate balls are centred on a separated net
  of Z at each depth in [N, n_max]; covers are solved exactly by
  branch-and-bound up to 24 balls and greedily beyond, packings by greedy
  max-weight independent sets with swap improvement.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import sparse
from scipy.special import logsumexp

from .core import NDSystem, PotentialSeq, birkhoff_profile, cylinder_length, orbit, bowen_matrix
from .covering import _DistanceOracle
from .lp import InfeasibleCover, fractional_cover

MODES = ("center", "sup", "weighted")
EXACT_LIMIT = 24


class BracketError(ValueError):
    """The bracket does not contain a crossing of the value function through 1."""


# ---------------------------------------------------------------------------
# helpers


def _as_targets(sys: NDSystem, Z) -> np.ndarray:
    lev = sys.level(0)
    return lev.as_set(lev.points if Z is None else Z)


def _level_constant(f: PotentialSeq | None) -> bool:
    return f is None or (f.level_values is not None and f.symbol_values is None)


def _tree_ok(sys: NDSystem, f: PotentialSeq | None, eps: float, closed: bool) -> bool:
    if sys.shift is None or not (f is None or f.symbol_local):
        return False
    return eps < 1 if closed else eps <= 1


def _opt(kind: str):
    return np.minimum if kind == "cover" else np.maximum


# ---------------------------------------------------------------------------
# exact routes on shifts


class _Homogeneous:
    """Whole full shift, level-constant potential."""

    def __init__(self, sys: NDSystem, f: PotentialSeq | None, N: int, n_top: int, eps: float, closed: bool):
        spec = sys.shift
        self.n = np.arange(N, n_top + 1)
        lengths = np.array([cylinder_length(int(n), eps, closed) for n in self.n])
        if lengths.max() > spec.depth:
            raise ValueError(f"word depth {spec.depth} too short for depth {n_top} at eps={eps}")
        logm = np.concatenate([[0.0], np.cumsum(spec.log_sizes()[:spec.depth])])
        a = np.zeros(n_top) if f is None else np.array([float(f.level_values(k)) for k in range(n_top)])
        F = np.concatenate([[0.0], np.cumsum(a)])
        self.base = logm[lengths] + F[self.n]

    def log_value(self, s: float, kind: str) -> float:
        v = self.base - self.n * s
        return float(v.min() if kind == "cover" else v.max())


class _CylinderTree:
    """Prefix tree of a finite set of words with per-word Birkhoff sums."""

    def __init__(self, sys: NDSystem, f: PotentialSeq | None, Z: np.ndarray, n_top: int):
        Z = np.unique(np.asarray(Z), axis=0)
        self.Z = Z
        self.sizes = sys.shift.sizes
        L = Z.shape[1]
        if L < n_top:
            raise ValueError("words shorter than the requested depth")
        first = np.full(len(Z), -1)
        if len(Z) > 1:
            neq = Z[1:] != Z[:-1]
            first[1:] = np.argmax(neq, axis=1)
        self.first = first
        if f is None:
            self.S = np.zeros((len(Z), n_top))
        else:
            vals = np.empty((len(Z), n_top))
            for j in range(n_top):
                vals[:, j] = f.table(j, self.sizes[j])[Z[:, j]]
            self.S = np.cumsum(vals, axis=1)
        self._starts: dict[int, np.ndarray] = {}

    def starts(self, length: int) -> np.ndarray:
        if length not in self._starts:
            # row 0 has first = -1, so it always starts a group
            self._starts[length] = np.nonzero(self.first < length)[0]
        return self._starts[length]

    def log_value(self, s: float, N: int, n_top: int, eps: float, closed: bool, kind: str) -> float:
        by_len: dict[int, list[int]] = {}
        for n in range(N, n_top + 1):
            by_len.setdefault(cylinder_length(n, eps, closed), []).append(n)
        top = max(by_len)
        if top > self.Z.shape[1]:
            raise ValueError(f"words of length {self.Z.shape[1]} too short for cylinders of length {top}")
        opt = _opt(kind)
        child = None
        child_starts = None
        for ell in range(top, -1, -1):
            st = self.starts(ell) if ell > 0 else np.array([0])
            own = None
            for n in by_len.get(ell, []):
                w = -n * s + self.S[st, n - 1]
                own = w if own is None else opt(own, w)
            if child is not None:
                pos = np.searchsorted(child_starts, st)
                agg = np.logaddexp.reduceat(child, pos)
                val = agg if own is None else opt(own, agg)
            else:
                val = own
            child, child_starts = val, st
        return float(child[0])


# ---------------------------------------------------------------------------
# candidate families


@dataclass(frozen=True, eq=False)
class CandidateFamily:
    """Bowen balls at depths in [N, n_top] with their membership over a domain.

    ``member`` is a sparse (balls, domain) 0/1 matrix.  ``centers`` index the
    target set Z.
    """

    Z: np.ndarray
    domain: np.ndarray
    depths: np.ndarray
    centers: np.ndarray
    member: sparse.csr_matrix
    center_sum: np.ndarray
    sup_sum: np.ndarray
    eps: float
    closed: bool
    resolution: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.depths)

    def log_weights(self, s: float, mode: str = "center") -> np.ndarray:
        acc = self.center_sum if mode == "center" else self.sup_sum
        return -self.depths * s + acc

    def dense(self) -> np.ndarray:
        return self.member.toarray().astype(bool)


def build_family(sys: NDSystem, f: PotentialSeq | None, Z, N: int, n_top: int, eps: float,
                 closed: bool = False, centers: str = "net", domain=None, dedupe: str = "min") -> CandidateFamily:
    """Candidate balls centred in Z at every depth N..n_top.

    ``centers='net'`` uses a greedy (n, eps)-separated subset of Z at each
    depth, ``'all'`` every point of Z.  Balls with identical membership at the
    same depth are merged keeping the smallest (``dedupe='min'``) or largest
    centre sum, and independently the smallest or largest sup sum.
    """
    if N < 1 or n_top < N:
        raise ValueError("need 1 <= N <= n_top")
    Z = _as_targets(sys, Z)
    lev = sys.level(0)
    same = domain is None
    dom = Z if same else lev.as_set(domain)
    SZ = birkhoff_profile(sys, f, 0, n_top, Z) if f is not None else np.zeros((n_top, len(Z)))
    SD = SZ if same else (birkhoff_profile(sys, f, 0, n_top, dom) if f is not None else np.zeros((n_top, len(dom))))
    odom = orbit(sys, 0, n_top, dom)
    # sup weights range over the whole ball, so scan the carrier when it is small enough
    scan, carrier = None, _packing_domain(sys, dom)
    if f is not None and not _level_constant(f) and carrier is not dom:
        scan = carrier
        oscan = orbit(sys, 0, n_top, scan)
        Sscan = birkhoff_profile(sys, f, 0, n_top, scan)
    rows, depths, cidx, csum, ssum = [], [], [], [], []
    resolution = {}
    for n in range(N, n_top + 1):
        if centers == "net":
            oracle = _DistanceOracle(sys, Z, n)
            mind = np.full(len(Z), np.inf)
            idx, mem_rows = [], []
            for i in range(len(Z)):
                if mind[i] >= eps:
                    d = oracle.row(i)
                    idx.append(i)
                    np.minimum(mind, d, out=mind)
                    if same:
                        mem_rows.append(d <= eps if closed else d < eps)
            idx = np.asarray(idx, dtype=int)
            if same:
                mem = np.array(mem_rows)
            else:
                d = bowen_matrix(sys, 0, n, Z[idx], dom, orbit_points=odom[:n])
                mem = d <= eps if closed else d < eps
        elif centers == "all":
            idx = np.arange(len(Z))
            d = bowen_matrix(sys, 0, n, Z, dom, orbit_points=odom[:n])
            mem = d <= eps if closed else d < eps
        else:
            raise ValueError(f"unknown centre rule {centers!r}")
        c = SZ[n - 1, idx]
        if scan is None:
            sup = np.where(mem, SD[n - 1][None, :], -np.inf).max(axis=1)
        else:
            ds = bowen_matrix(sys, 0, n, Z[idx], scan, orbit_points=oscan[:n])
            inside = ds <= eps if closed else ds < eps
            sup = np.where(inside, Sscan[n - 1][None, :], -np.inf).max(axis=1)
        sup = np.maximum(sup, c)
        # merge duplicate balls at this depth
        packed = np.packbits(mem, axis=1)
        _, first, inv = np.unique(packed, axis=0, return_index=True, return_inverse=True)
        inv = inv.ravel()
        pick = np.argmin if dedupe == "min" else np.argmax
        keep, best_sup = [], []
        for g in range(len(first)):
            members = np.nonzero(inv == g)[0]
            keep.append(members[pick(c[members])])
            # the sup weight is optimised separately: another centre may carry a cheaper ball
            best_sup.append(sup[members[pick(sup[members])]])
        order = np.argsort(keep)
        keep = np.asarray(keep, dtype=int)[order]
        sup = np.full(len(c), np.nan)
        sup[keep] = np.asarray(best_sup)[order]
        sizes = mem.sum(axis=1)
        resolution[n] = float(np.median(sizes))
        rows.append(sparse.csr_matrix(mem[keep]))
        depths.append(np.full(len(keep), n))
        cidx.append(idx[keep])
        csum.append(c[keep])
        ssum.append(sup[keep])
    return CandidateFamily(
        Z=Z, domain=dom, depths=np.concatenate(depths), centers=np.concatenate(cidx),
        member=sparse.vstack(rows).tocsr(), center_sum=np.concatenate(csum), sup_sum=np.concatenate(ssum),
        eps=eps, closed=closed, resolution=resolution,
    )


# ---------------------------------------------------------------------------
# set cover solvers (log-weights)


def exact_cover(member: np.ndarray, logw: np.ndarray) -> tuple[float, np.ndarray]:
    """Minimum-weight cover by branch and bound; returns (log value, chosen indices)."""
    member = np.asarray(member, dtype=bool)
    nb, npts = member.shape
    if not member.any(axis=0).all():
        raise InfeasibleCover("a target point is covered by no candidate ball")
    top = float(np.max(logw))
    w = np.exp(np.asarray(logw) - top)
    masks = [int("".join("1" if b else "0" for b in row[::-1]) or "0", 2) for row in member]
    full = (1 << npts) - 1
    covering = [[i for i in range(nb) if member[i, p]] for p in range(npts)]
    best = [math.inf, ()]

    def search(covered: int, cost: float, chosen: tuple):
        if cost >= best[0]:
            return
        if covered == full:
            best[0], best[1] = cost, chosen
            return
        # branch on the uncovered point with fewest options
        rem = ~covered & full
        p_best, opts = None, None
        p = 0
        while rem:
            if rem & 1:
                o = covering[p]
                if opts is None or len(o) < len(opts):
                    p_best, opts = p, o
            rem >>= 1
            p += 1
        for i in sorted(opts, key=lambda i: w[i]):
            search(covered | masks[i], cost + w[i], chosen + (i,))

    search(0, 0.0, ())
    val = best[0]
    return (math.log(val) + top if val > 0 else -math.inf), np.asarray(best[1], dtype=int)


def greedy_cover(member: sparse.csr_matrix, logw: np.ndarray) -> tuple[float, np.ndarray]:
    """Lazy greedy weighted set cover by smallest weight per newly covered point."""
    member = sparse.csr_matrix(member)
    npts = member.shape[1]
    if np.any(np.diff(member.tocsc().indptr) == 0):
        raise InfeasibleCover("a target point is covered by no candidate ball")
    indptr, indices = member.indptr, member.indices
    covered = np.zeros(npts, dtype=bool)
    gain = np.diff(indptr).astype(int)
    heap = [(logw[i] - math.log(gain[i]), i) for i in range(member.shape[0]) if gain[i] > 0]
    heapq.heapify(heap)
    chosen = []
    left = npts
    while left > 0:
        key, i = heapq.heappop(heap)
        pts = indices[indptr[i]:indptr[i + 1]]
        g = int(np.count_nonzero(~covered[pts]))
        if g == 0:
            continue
        cur = logw[i] - math.log(g)
        if heap and cur > heap[0][0] + 1e-15:
            heapq.heappush(heap, (cur, i))
            continue
        chosen.append(i)
        covered[pts] = True
        left -= g
    chosen = np.asarray(chosen, dtype=int)
    return float(logsumexp(logw[chosen])), chosen


def solve_cover(member, logw: np.ndarray) -> tuple[float, np.ndarray, str]:
    if member.shape[0] <= EXACT_LIMIT:
        dense = member.toarray().astype(bool) if sparse.issparse(member) else np.asarray(member, bool)
        v, ch = exact_cover(dense, logw)
        return v, ch, "exact"
    v, ch = greedy_cover(member, logw)
    return v, ch, "greedy"


# ---------------------------------------------------------------------------
# packing solver


def conflict_graph(member: sparse.csr_matrix) -> sparse.csr_matrix:
    m = sparse.csr_matrix(member, dtype=np.int32)
    g = (m @ m.T).tocsr()
    g.setdiag(0)
    g.eliminate_zeros()
    return g


def exact_packing(conflicts: sparse.csr_matrix, logw: np.ndarray) -> tuple[float, np.ndarray]:
    """Maximum-weight independent set by branch and bound (small families only)."""
    nb = conflicts.shape[0]
    if nb == 0:
        return -math.inf, np.zeros(0, dtype=int)
    top = float(np.max(logw))
    w = np.exp(np.asarray(logw) - top)
    order = [int(i) for i in np.argsort(-w, kind="stable")]
    pos = {i: r for r, i in enumerate(order)}
    adj = [0] * nb
    g = sparse.csr_matrix(conflicts)
    for i in range(nb):
        for j in g.indices[g.indptr[i]:g.indptr[i + 1]]:
            adj[pos[i]] |= 1 << pos[int(j)]
    ws = [float(w[i]) for i in order]
    best = [0.0, 0]

    def search(r: int, allowed: int, value: float, chosen: int):
        if value > best[0]:
            best[0], best[1] = value, chosen
        rest = allowed >> r
        bound, q = value, r
        while rest:
            if rest & 1:
                bound += ws[q]
            rest >>= 1
            q += 1
        if bound <= best[0]:
            return
        while r < nb and not (allowed >> r) & 1:
            r += 1
        if r == nb:
            return
        search(r + 1, allowed & ~adj[r] & ~(1 << r), value + ws[r], chosen | (1 << r))
        search(r + 1, allowed & ~(1 << r), value, chosen)

    search(0, (1 << nb) - 1, 0.0, 0)
    picked = np.asarray(sorted(order[r] for r in range(nb) if (best[1] >> r) & 1), dtype=int)
    return math.log(best[0]) + top, picked


def max_weight_packing(conflicts: sparse.csr_matrix, logw: np.ndarray, sweeps: int = 3) -> tuple[float, np.ndarray]:
    """Greedy heaviest-first independent set, then 1-for-1 and 1-for-2 swap improvement."""
    nb = conflicts.shape[0]
    if nb == 0:
        return -math.inf, np.zeros(0, dtype=int)
    top = float(np.max(logw))
    w = np.exp(logw - top)
    indptr, nbr = conflicts.indptr, conflicts.indices
    chosen = np.zeros(nb, dtype=bool)
    blocked = np.zeros(nb, dtype=int)  # number of chosen neighbours
    for i in np.argsort(-logw, kind="stable"):
        if blocked[i] == 0:
            chosen[i] = True
            blocked[nbr[indptr[i]:indptr[i + 1]]] += 1

    def neighbours(i):
        return nbr[indptr[i]:indptr[i + 1]]

    for _ in range(sweeps):
        improved = False
        for u in np.nonzero(chosen)[0]:
            if not chosen[u]:
                continue
            # balls whose only chosen neighbour is u
            cand = [v for v in neighbours(u) if not chosen[v] and blocked[v] == 1]
            if not cand:
                continue
            cand.sort(key=lambda v: -w[v])
            best_gain, best_set = 0.0, None
            if w[cand[0]] > w[u] * (1 + 1e-12):
                best_gain, best_set = w[cand[0]] - w[u], (cand[0],)
            for a in range(len(cand)):
                if w[cand[a]] + (w[cand[a + 1]] if a + 1 < len(cand) else 0.0) <= w[u] + best_gain:
                    break
                na = set(neighbours(cand[a]))
                for b in range(a + 1, len(cand)):
                    gain = w[cand[a]] + w[cand[b]] - w[u]
                    if gain <= best_gain * (1 + 1e-12) or gain <= 1e-12 * w[u]:
                        break
                    if cand[b] not in na:
                        best_gain, best_set = gain, (cand[a], cand[b])
                        break
            if best_set is not None:
                chosen[u] = False
                blocked[neighbours(u)] -= 1
                for v in best_set:
                    chosen[v] = True
                    blocked[neighbours(v)] += 1
                improved = True
        if not improved:
            break
    sel = np.nonzero(chosen)[0]
    return float(logsumexp(logw[sel])), sel


# ---------------------------------------------------------------------------
# reports and value functions


@dataclass(frozen=True)
class CoverValueReport:
    s: float
    N: int
    eps: float
    mode: str
    log_upper: float
    log_lower: float
    method: str
    witness: np.ndarray | None = None
    coefficients: np.ndarray | None = None
    family_size: int = 0

    @property
    def log_value(self) -> float:
        return self.log_upper

    @property
    def upper_bound(self) -> float:
        return math.exp(self.log_upper) if self.log_upper < 709 else math.inf

    @property
    def lower_bound(self) -> float:
        return math.exp(self.log_lower) if self.log_lower < 709 else math.inf


@dataclass(frozen=True)
class PackingValueReport:
    s: float
    N: int
    eps: float
    log_value: float
    method: str
    witness: np.ndarray | None = None
    parts: tuple[str, ...] = ("Z",)
    part_values: tuple[float, ...] = ()

    @property
    def value(self) -> float:
        return math.exp(self.log_value) if self.log_value < 709 else math.inf

    @property
    def lower_bound(self) -> float:
        return self.value


def cover_value(sys: NDSystem, f: PotentialSeq | None, Z, s: float, N: int, eps: float, mode: str = "center",
                n_max: int | None = None, family: CandidateFamily | None = None, method: str = "auto",
                lp: bool = True, centers: str = "net") -> CoverValueReport:
    """Cheapest (N, eps)-cover of Z by open Bowen balls of depths N..n_max."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if mode == "weighted":
        return weighted_cover_value(sys, f, Z, s, N, eps, n_max=n_max, family=family, centers=centers)
    n_top = N if n_max is None else n_max
    if family is None and method in ("auto", "tree") and _tree_ok(sys, f, eps, False):
        if Z is None and _level_constant(f):
            v = _Homogeneous(sys, f, N, n_top, eps, False).log_value(s, "cover")
            return CoverValueReport(s, N, eps, mode, v, v, "closed-form")
        tree = _CylinderTree(sys, f, _as_targets(sys, Z), n_top)
        v = tree.log_value(s, N, n_top, eps, False, "cover")
        return CoverValueReport(s, N, eps, mode, v, v, "tree")
    if method == "tree":
        raise ValueError("tree route needs a shift, a symbol-local potential and eps <= 1")
    fam = family if family is not None else build_family(sys, f, Z, N, n_top, eps, centers=centers)
    logw = fam.log_weights(s, mode)
    v, chosen, how = solve_cover(fam.member, logw)
    lower = v
    if lp:
        top = float(np.max(logw))
        res = fractional_cover(fam.member.toarray(), np.exp(logw - top))
        lower = math.log(res.value) + top
    return CoverValueReport(s, N, eps, mode, v, lower, how, witness=chosen, family_size=len(fam))


def weighted_cover_value(sys: NDSystem, f: PotentialSeq | None, Z, s: float, N: int, eps: float,
                         n_max: int | None = None, family: CandidateFamily | None = None,
                         centers: str = "net") -> CoverValueReport:
    """Fractional cover LP with sup-over-ball weights over the candidate family."""
    n_top = N if n_max is None else n_max
    fam = family if family is not None else build_family(sys, f, Z, N, n_top, eps, centers=centers)
    logw = fam.log_weights(s, "sup")
    top = float(np.max(logw))
    res = fractional_cover(fam.member.toarray(), np.exp(logw - top))
    v = math.log(res.value) + top if res.value > 0 else -math.inf
    support = np.nonzero(res.x > 1e-12)[0]
    return CoverValueReport(s, N, eps, "weighted", v, v, "lp", witness=support, coefficients=res.x,
                            family_size=len(fam))


def dyadic_parts(sys: NDSystem, Z: np.ndarray) -> list[np.ndarray]:
    """One refinement step of Z: first-symbol cylinders on shifts, halves of the range otherwise."""
    lev = sys.level(0)
    if lev.kind == "symbolic":
        key = Z[:, 0]
    elif lev.point_ndim == 0:
        lo, hi = float(np.min(lev.points)), float(np.max(lev.points))
        key = (Z >= (lo + hi) / 2).astype(int)
    else:
        mid = np.median(Z[:, 0])
        key = (Z[:, 0] >= mid).astype(int)
    return [np.nonzero(key == v)[0] for v in np.unique(key)]


def _packing_domain(sys: NDSystem, Z: np.ndarray):
    lev = sys.level(0)
    if len(lev) <= 50_000:
        return lev.points
    return Z


class _FamilyPacking:
    def __init__(self, sys, f, Z, N, n_top, eps, mode, centers):
        self.fam = build_family(sys, f, Z, N, n_top, eps, closed=True, centers=centers,
                                domain=_packing_domain(sys, Z), dedupe="max")
        self.graph = conflict_graph(self.fam.member)
        self.mode = mode

    def solve(self, s: float):
        logw = self.fam.log_weights(s, self.mode)
        if len(self.fam) <= EXACT_LIMIT:
            return exact_packing(self.graph, logw)
        return max_weight_packing(self.graph, logw)


def packing_value(sys: NDSystem, f: PotentialSeq | None, Z, s: float, N: int, eps: float,
                  decomposition: Sequence[np.ndarray] | None = None, n_max: int | None = None,
                  mode: str = "center", method: str = "auto", centers: str = "net") -> PackingValueReport:
    """Heaviest disjoint family of closed Bowen balls centred in Z, depths N..n_max.

    ``decomposition`` is a list of index arrays partitioning Z; the value is
    the sum of the per-part values.
    """
    n_top = N if n_max is None else n_max
    if method in ("auto", "tree") and _tree_ok(sys, f, eps, True):
        if decomposition is None and Z is None and _level_constant(f):
            v = _Homogeneous(sys, f, N, n_top, eps, True).log_value(s, "packing")
            return PackingValueReport(s, N, eps, v, "closed-form", part_values=(v,))
        Zs = _as_targets(sys, Z)
        parts = decomposition if decomposition is not None else [np.arange(len(Zs))]
        vals = tuple(_CylinderTree(sys, f, Zs[p], n_top).log_value(s, N, n_top, eps, True, "packing")
                     for p in parts)
        return PackingValueReport(s, N, eps, float(logsumexp(vals)), "tree",
                                  parts=tuple(f"part{i}" for i in range(len(parts))), part_values=vals)
    if method == "tree":
        raise ValueError("tree route needs a shift, a symbol-local potential and eps < 1")
    Zs = _as_targets(sys, Z)
    parts = decomposition if decomposition is not None else [np.arange(len(Zs))]
    vals, wit = [], []
    for p in parts:
        packer = _FamilyPacking(sys, f, Zs[p], N, n_top, eps, mode, centers)
        v, sel = packer.solve(s)
        vals.append(v)
        # witness rows: (index of the centre in Z, depth)
        wit.append(np.column_stack([np.asarray(p)[packer.fam.centers[sel]], packer.fam.depths[sel]]))
    return PackingValueReport(s, N, eps, float(logsumexp(vals)), "family", witness=np.vstack(wit),
                              parts=tuple(f"part{i}" for i in range(len(parts))), part_values=tuple(vals))


# ---------------------------------------------------------------------------
# critical exponents


def _log_of(result) -> float:
    if hasattr(result, "log_value"):
        return float(result.log_value)
    v = float(result)
    return math.log(v) if v > 0 else -math.inf


def critical_exponent(value_fn: Callable[[float], object], s_bracket: tuple[float, float], tol: float = 1e-10,
                      samples: int = 5) -> float:
    """s at which a non-increasing value function crosses 1, by bisection.

    ``value_fn`` returns either a report with ``log_value`` or a plain
    (linear-scale) value.
    """
    lo, hi = map(float, s_bracket)
    if not lo < hi:
        raise ValueError("bracket must satisfy lo < hi")
    grid = np.linspace(lo, hi, samples)
    vals = [_log_of(value_fn(s)) for s in grid]
    if vals[0] < 0:
        raise BracketError(f"value at s={lo} is below 1")
    if vals[-1] > 0:
        raise BracketError(f"value at s={hi} is above 1")
    for a, b in zip(vals, vals[1:]):
        if b > a + 1e-9 * max(1.0, abs(a)) and math.isfinite(a):
            raise ValueError("value function is not non-increasing on the bracket")
    # start from the sampled sub-bracket containing the crossing
    for i in range(samples - 1):
        if vals[i] >= 0 >= vals[i + 1]:
            lo, hi = grid[i], grid[i + 1]
            break
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _log_of(value_fn(mid)) >= 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def find_bracket(log_value: Callable[[float], float], start: tuple[float, float] = (-1.0, 1.0),
                 limit: int = 60) -> tuple[float, float]:
    """Widen ``start`` until log_value(lo) >= 0 >= log_value(hi)."""
    lo, hi = start
    width = hi - lo
    for _ in range(limit):
        if log_value(lo) >= 0:
            break
        lo -= width
        width *= 2
    else:
        raise BracketError("no s with value >= 1 found")
    width = hi - lo
    for _ in range(limit):
        if log_value(hi) <= 0:
            break
        hi += width
        width *= 2
    else:
        raise BracketError("no s with value <= 1 found")
    return lo, hi


# ---------------------------------------------------------------------------
# estimators


@dataclass(frozen=True)
class EstimatorConfig:
    """Knobs of the pressure estimators.

    crossing: ``unit`` locates the s where the value over depths
    [n_min, n_max] crosses 1; ``slope`` fits log(value at s=0, depth n)
    against n over the resolved depths, which cancels the constant factor
    from ball boundaries; ``auto`` picks unit on shifts and slope elsewhere.
    """

    eps_schedule: tuple[float, ...] = (0.1, 0.05, 0.025)
    n_max: int = 12
    n_min: int | None = None
    s_tol: float = 1e-12
    s_bracket: tuple[float, float] | None = None
    crossing: str = "auto"
    mode: str = "center"
    plateau_tol: float = 0.01
    stop_at_plateau: bool = False
    min_ball_points: int = 32
    slope_span: int = 4
    refine: bool = True
    centers: str = "net"
    method: str = "auto"
    n_sweep: tuple[int, ...] = ()

    def __post_init__(self):
        if self.crossing not in ("auto", "unit", "slope"):
            raise ValueError("crossing must be auto, unit or slope")
        if self.mode not in ("center", "sup"):
            raise ValueError("mode must be center or sup")
        if not self.eps_schedule or any(e <= 0 for e in self.eps_schedule):
            raise ValueError("eps schedule must be non-empty and positive")
        if self.n_max < 1 or (self.n_min is not None and not 1 <= self.n_min <= self.n_max):
            raise ValueError("need 1 <= n_min <= n_max")

    @classmethod
    def geometric(cls, eps0: float, count: int, **kw) -> "EstimatorConfig":
        """Schedule eps0 * 2^-i for i < count."""
        return cls(eps_schedule=tuple(eps0 * 2.0 ** -i for i in range(count)), **kw)


@dataclass(frozen=True)
class PressureEstimate:
    value: float
    kind: str
    per_eps: tuple[tuple[float, float], ...]
    eps_schedule: tuple[float, ...]
    depth_range: tuple[int, int]
    crossing: str
    plateau: bool
    flags: tuple[str, ...] = ()
    diagnostics: dict = field(default_factory=dict)


def _crossing(sys: NDSystem, cfg: EstimatorConfig) -> str:
    if cfg.crossing != "auto":
        return cfg.crossing
    return "unit" if sys.shift is not None else "slope"


def _log_evaluator(kind: str, sys, f, Z, N, n_top, eps, cfg: EstimatorConfig) -> tuple[Callable[[float], float], str]:
    """s -> log value with everything independent of s built once."""
    closed = kind == "packing"
    if cfg.method in ("auto", "tree") and _tree_ok(sys, f, eps, closed):
        if Z is None and _level_constant(f):
            h = _Homogeneous(sys, f, N, n_top, eps, closed)
            return (lambda s: h.log_value(s, kind)), "closed-form"
        Zs = _as_targets(sys, Z)
        parts = [np.arange(len(Zs))]
        if kind == "packing" and cfg.refine:
            parts = [parts[0], *dyadic_parts(sys, Zs)]
        trees = [_CylinderTree(sys, f, Zs[p], n_top) for p in parts]
        if kind == "cover":
            return (lambda s: trees[0].log_value(s, N, n_top, eps, False, "cover")), "tree"

        def packing_tree(s):
            whole = trees[0].log_value(s, N, n_top, eps, True, "packing")
            if len(trees) == 1:
                return whole
            split = float(logsumexp([t.log_value(s, N, n_top, eps, True, "packing") for t in trees[1:]]))
            return min(whole, split)

        return packing_tree, "tree"
    Zs = _as_targets(sys, Z)
    if kind == "cover":
        fam = build_family(sys, f, Zs, N, n_top, eps, centers=cfg.centers)
        return (lambda s: solve_cover(fam.member, fam.log_weights(s, cfg.mode))[0]), "family"
    packers = [_FamilyPacking(sys, f, Zs, N, n_top, eps, cfg.mode, cfg.centers)]
    if cfg.refine:
        packers += [_FamilyPacking(sys, f, Zs[p], N, n_top, eps, cfg.mode, cfg.centers) for p in dyadic_parts(sys, Zs)]

    def packing_family(s):
        whole = packers[0].solve(s)[0]
        if len(packers) == 1:
            return whole
        return min(whole, float(logsumexp([p.solve(s)[0] for p in packers[1:]])))

    return packing_family, "family"


@dataclass(frozen=True)
class _Logged:
    log_value: float


def _unit_exponent(kind, sys, f, Z, N, n_top, eps, cfg) -> tuple[float, str]:
    fn, route = _log_evaluator(kind, sys, f, Z, N, n_top, eps, cfg)
    bracket = cfg.s_bracket or find_bracket(fn)
    return critical_exponent(lambda s: _Logged(fn(s)), bracket, cfg.s_tol), route


def _probe_ball_size(sys, Z: np.ndarray, n: int, eps: float, closed: bool) -> int:
    """Points of Z in the depth-n ball around the middle point of Z."""
    d = bowen_matrix(sys, 0, n, Z[len(Z) // 2], Z)[0]
    return int(np.count_nonzero(d <= eps if closed else d < eps))


def _slope_exponent(kind, sys, f, Z, eps, cfg) -> tuple[float, dict]:
    """Least-squares slope of log V_n(0) over the resolved single depths n."""
    closed = kind == "packing"
    Zs = _as_targets(sys, Z)
    logs, used, clipped = [], [], False
    for n in range(1, cfg.n_max + 1):
        if len(Zs) > 1 and _probe_ball_size(sys, Zs, n, eps, closed) < cfg.min_ball_points:
            clipped = True
            break
        if closed:
            packer = _FamilyPacking(sys, f, Zs, n, n, eps, cfg.mode, cfg.centers)
            size = packer.fam.resolution[n]
            v = packer.solve(0.0)[0]
            if cfg.refine:
                split = [_FamilyPacking(sys, f, Zs[p], n, n, eps, cfg.mode, cfg.centers).solve(0.0)[0]
                         for p in dyadic_parts(sys, Zs)]
                v = min(v, float(logsumexp(split)))
        else:
            fam = build_family(sys, f, Zs, n, n, eps, centers=cfg.centers)
            size = fam.resolution[n]
            v = solve_cover(fam.member, fam.log_weights(0.0, cfg.mode))[0]
        if size < cfg.min_ball_points and len(Zs) > 1:
            clipped = True
            break
        logs.append(v)
        used.append(n)
    if not used:
        raise InfeasibleCover(f"no depth resolved at eps={eps}; grid too coarse")
    lo = cfg.n_min if cfg.n_min is not None else max(1, used[-1] - cfg.slope_span)
    sel = [i for i, n in enumerate(used) if n >= lo]
    n_arr = np.array([used[i] for i in sel], dtype=float)
    y = np.array([logs[i] for i in sel])
    if len(sel) >= 2:
        slope = float(np.polyfit(n_arr, y, 1)[0])
    else:
        slope = float(y[0] / n_arr[0])
    return slope, {"depths": tuple(used), "log_values": tuple(logs), "fit": (int(n_arr[0]), int(n_arr[-1])),
                   "clipped": clipped}


def _estimate(kind: str, sys: NDSystem, f: PotentialSeq | None, Z, cfg: EstimatorConfig) -> PressureEstimate:
    crossing = _crossing(sys, cfg)
    N = cfg.n_min if cfg.n_min is not None else cfg.n_max
    per_eps, diag, flags = [], {}, []
    plateau = False
    for eps in cfg.eps_schedule:
        if crossing == "unit":
            s_eps, route = _unit_exponent("cover" if kind == "bowen" else "packing", sys, f, Z, N, cfg.n_max, eps, cfg)
            d = {"route": route, "N": N}
            if cfg.n_sweep:
                d["n_sweep"] = tuple((n, _unit_exponent("cover" if kind == "bowen" else "packing", sys, f, Z, n,
                                                        cfg.n_max, eps, cfg)[0]) for n in cfg.n_sweep)
        else:
            s_eps, d = _slope_exponent("cover" if kind == "bowen" else "packing", sys, f, Z, eps, cfg)
            if d["clipped"]:
                flags.append(f"depth-clipped@eps={eps:g}:n<={d['depths'][-1]}")
        if per_eps and abs(s_eps - per_eps[-1][1]) < cfg.plateau_tol:
            plateau = True
        per_eps.append((eps, s_eps))
        diag[eps] = d
        if plateau and cfg.stop_at_plateau:
            break
    if len(cfg.eps_schedule) > 1 and not plateau:
        flags.append("plateau-not-reached")
    slack = 0.0
    if sys.level(0).kind == "interval" and (sys.max_level is None or sys.max_level >= cfg.n_max):
        slack = sys.slack(0, cfg.n_max)
    if slack > 0:
        flags.append(f"grid-slack={slack:.3g}")
    depth_range = (N, cfg.n_max) if crossing == "unit" else (1, cfg.n_max)
    return PressureEstimate(value=per_eps[-1][1], kind=kind, per_eps=tuple(per_eps),
                            eps_schedule=tuple(cfg.eps_schedule), depth_range=depth_range, crossing=crossing,
                            plateau=plateau, flags=tuple(flags), diagnostics=diag)


def bowen_pressure(sys: NDSystem, f: PotentialSeq | None = None, Z=None,
                   config: EstimatorConfig | None = None) -> PressureEstimate:
    return _estimate("bowen", sys, f, Z, config or EstimatorConfig())


def packing_pressure(sys: NDSystem, f: PotentialSeq | None = None, Z=None,
                     config: EstimatorConfig | None = None) -> PressureEstimate:
    return _estimate("packing", sys, f, Z, config or EstimatorConfig())


def bowen_entropy(sys: NDSystem, Z=None, config: EstimatorConfig | None = None) -> PressureEstimate:
    return bowen_pressure(sys, None, Z, config)


def packing_entropy(sys: NDSystem, Z=None, config: EstimatorConfig | None = None) -> PressureEstimate:
    return packing_pressure(sys, None, Z, config)
