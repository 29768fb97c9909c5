"""Brute-force reference computations on small full shifts.

Everything here works on plain tuples and Python loops, so it shares no code
with the package beyond the system it inspects.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def all_words(sizes):
    return [tuple(w) for w in itertools.product(*[range(m) for m in sizes])]


def word_distance(a, b):
    for i, (x, y) in enumerate(zip(a, b)):
        if x != y:
            return 2.0 ** -i
    return 0.0


def bowen_word_distance(a, b, n):
    """max over j < n of the first-difference distance between the j-fold shifts."""
    return max(word_distance(a[j:], b[j:]) for j in range(n))


def in_ball(center, y, n, eps, closed=False):
    d = bowen_word_distance(center, y, n)
    return d <= eps if closed else d < eps


def birkhoff(f, word, n):
    """f(k, word_at_level_k) summed along the orbit."""
    return sum(f(j, word[j:]) for j in range(n))


def tail_averages(sizes, lo, hi):
    """min and max over n in [lo, hi] of (1/n) sum_{k<n} log m_k."""
    vals = []
    total = 0.0
    for n in range(1, hi + 1):
        total += math.log(sizes[n - 1])
        if n >= lo:
            vals.append(total / n)
    return min(vals), max(vals)


def ball_family(Z, carrier, f, N, n_top, eps, closed=False):
    """(center, depth, covered Z-indices, center weight sum, sup weight sum) for every centre in Z."""
    out = []
    for z in Z:
        for n in range(N, n_top + 1):
            covered = frozenset(i for i, y in enumerate(Z) if in_ball(z, y, n, eps, closed))
            c = birkhoff(f, z, n)
            sup = max(birkhoff(f, y, n) for y in carrier if in_ball(z, y, n, eps, closed))
            out.append((z, n, covered, c, sup))
    return out


def min_cover(balls, size, s, which="center"):
    """Cheapest sub-family covering all of range(size), by enumeration of subsets."""
    pos = 3 if which == "center" else 4
    weights = [math.exp(-b[1] * s + b[pos]) for b in balls]
    best = math.inf
    target = frozenset(range(size))
    for r in range(1, len(balls) + 1):
        for combo in itertools.combinations(range(len(balls)), r):
            cov = frozenset().union(*(balls[i][2] for i in combo))
            if cov == target:
                best = min(best, sum(weights[i] for i in combo))
    return best


def max_packing(balls, s, carrier_members):
    """Heaviest pairwise disjoint sub-family, disjointness judged on explicit point sets."""
    weights = [math.exp(-b[1] * s + b[3]) for b in balls]
    best = 0.0
    for r in range(1, len(balls) + 1):
        for combo in itertools.combinations(range(len(balls)), r):
            sets = [carrier_members[i] for i in combo]
            if all(a.isdisjoint(b) for a, b in itertools.combinations(sets, 2)):
                best = max(best, sum(weights[i] for i in combo))
    return best


def cylinder_cover_count(sizes, n):
    return math.prod(sizes[:n])


def random_words(rng, sizes, count):
    pts = set()
    while len(pts) < count:
        pts.add(tuple(int(rng.integers(m)) for m in sizes))
    return sorted(pts)


def as_array(words):
    return np.asarray(words, dtype=np.int64)
