import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ndspressure import (
    BowenBallSpec,
    DoublingChainSpec,
    LevelOutOfRange,
    PotentialSeq,
    ShiftSpec,
    birkhoff_sum,
    bowen_ball_points,
    bowen_distance,
    compose,
    constant_potential,
    cylinder_length,
    equicontinuity_modulus,
    level_potential,
    make_doubling_chain,
    make_na_shift,
    potential_norm,
    symbol_potential,
)
from ndspressure.core import FAILS, UNBOUNDED, birkhoff_profile, bowen_matrix, bowen_profile, symbolic_metric

from . import oracles as O


@pytest.fixture(scope="module")
def shift3():
    return make_na_shift(ShiftSpec((2, 3, 2, 2, 3, 2), 6))


@pytest.fixture(scope="module")
def chain():
    return make_doubling_chain(DoublingChainSpec("euclidean", 1 / 32))


def test_compose_identity_and_drop(shift3):
    w = np.array([1, 2, 0, 1, 2, 1])
    assert np.array_equal(compose(shift3, 0, 0, w), w)
    assert np.array_equal(compose(shift3, 0, 3, w), w[3:])


def test_compose_beyond_truncation(shift3):
    with pytest.raises(LevelOutOfRange):
        compose(shift3, 0, 7, np.zeros(6, dtype=int))


def test_doubling_compose_is_exact(chain):
    x = np.array([0.25, 1 / 32])
    assert np.allclose(compose(chain, 0, 3, x), 8 * x)


def test_symbolic_metric_values():
    a = np.array([0, 1, 1])
    assert symbolic_metric(a, np.array([1, 1, 1])) == 1.0
    assert symbolic_metric(a, np.array([0, 0, 1])) == 0.5
    assert symbolic_metric(a, a) == 0.0


def test_bowen_distance_matches_brute_force(shift3):
    words = shift3.level(0).points
    rng = np.random.default_rng(0)
    for _ in range(50):
        i, j = rng.integers(len(words), size=2)
        n = int(rng.integers(1, 5))
        want = O.bowen_word_distance(tuple(words[i]), tuple(words[j]), n)
        assert bowen_distance(shift3, 0, n, words[i], words[j]) == want


def test_bowen_distance_doubling_is_last_iterate(chain):
    x, y = 0.125, 0.1875
    assert bowen_distance(chain, 0, 4, x, y) == pytest.approx(8 * abs(x - y))


def test_bowen_profile_is_running_max(shift3):
    pts = shift3.level(0).points
    x = pts[5]
    rows = bowen_profile(shift3, 0, 4, x, pts)
    for n in range(1, 5):
        assert np.array_equal(rows[n - 1], bowen_matrix(shift3, 0, n, x, pts)[0])
    assert np.all(np.diff(rows, axis=0) >= 0)


def test_ball_methods_agree(chain):
    dom = chain.level(0).points
    for closed in (False, True):
        spec = BowenBallSpec(0, 0.5, 3, 0.3, closed)
        a = bowen_ball_points(chain, spec, dom, "max")
        b = bowen_ball_points(chain, spec, dom, "intersection")
        assert np.array_equal(a, b)


def test_ball_spec_validation():
    with pytest.raises(ValueError):
        BowenBallSpec(0, 0.0, 0, 0.1)
    with pytest.raises(ValueError):
        BowenBallSpec(0, 0.0, 1, 0.0)


@pytest.mark.parametrize("n, eps, closed, want", [
    (3, 0.99, False, 3), (3, 0.5, False, 4), (3, 0.5, True, 3), (3, 0.15, False, 5),
    (2, 1.0, False, 2), (2, 1.0, True, 0), (2, 1.5, False, 0),
])
def test_cylinder_length(n, eps, closed, want):
    assert cylinder_length(n, eps, closed) == want


@given(n=st.integers(1, 5), eps=st.sampled_from([0.05, 0.15, 0.3, 0.5, 0.75, 0.99]), closed=st.booleans())
@settings(max_examples=40, deadline=None)
def test_ball_is_the_cylinder(n, eps, closed):
    sys = make_na_shift(ShiftSpec((2,) * 9, 9))
    words = sys.level(0).points
    c = cylinder_length(n, eps, closed)
    x = words[77]
    inside = bowen_ball_points(sys, BowenBallSpec(0, x, n, eps, closed), words)
    assert len(inside) == 2 ** (9 - c)
    assert np.all(inside[:, :c] == x[:c])


def test_birkhoff_sum_constant_and_level(shift3):
    w = shift3.level(0).points[3]
    assert birkhoff_sum(shift3, constant_potential(0.7), 0, 4, w) == pytest.approx(2.8)
    f = level_potential(lambda k: float(k))
    assert birkhoff_sum(shift3, f, 1, 3, w[1:]) == pytest.approx(1 + 2 + 3)


def test_birkhoff_sum_symbol_against_reference(shift3):
    tabs = [np.arange(m) * 0.5 - 0.1 * k for k, m in enumerate(shift3.shift.sizes)]
    f = symbol_potential(lambda k: tabs[k])
    pts = shift3.level(0).points
    prof = birkhoff_profile(shift3, f, 0, 4, pts)
    for i in (0, 17, len(pts) - 1):
        w = tuple(pts[i])
        ref = [O.birkhoff(lambda k, v: tabs[k][v[0]], w, n) for n in range(1, 5)]
        assert np.allclose(prof[:, i], ref)


@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3), st.integers(1, 4))
@settings(max_examples=30, deadline=None)
def test_birkhoff_additive_in_potential(vals, n):
    sys = make_na_shift(ShiftSpec((2,) * 6, 6))
    f = level_potential(lambda k: vals[k % 3])
    g = constant_potential(1.5)
    h = PotentialSeq(funcs=lambda k, p: f(k, p) + g(k, p))
    w = sys.level(0).points[9]
    assert birkhoff_sum(sys, h, 0, n, w) == pytest.approx(birkhoff_sum(sys, f, 0, n, w) + birkhoff_sum(sys, g, 0, n, w))


def test_potential_norm(shift3):
    assert potential_norm(constant_potential(-2.5), shift3) == pytest.approx(2.5)
    chain = make_doubling_chain(DoublingChainSpec("euclidean", 1 / 16, max_level=40))
    grow = level_potential(lambda k: 2.0 ** k)
    assert potential_norm(grow, chain) == UNBOUNDED
    declared = PotentialSeq(funcs=lambda k, p: np.zeros(len(p)), declared_norm=UNBOUNDED)
    assert potential_norm(declared, shift3) == UNBOUNDED


def test_potential_norm_rejects_wrong_declaration(shift3):
    f = PotentialSeq(funcs=lambda k, p: np.full(len(p), 3.0), declared_norm=1.0)
    with pytest.raises(ValueError):
        potential_norm(f, shift3)


def test_equicontinuity_modulus_identity(chain):
    delta = equicontinuity_modulus(chain, lambda k, x: x, 0.25, levels=[0, 1, 2])
    assert delta != FAILS and delta <= 0.25


def test_equicontinuity_modulus_fails_for_jump(chain):
    jump = lambda k, x: np.where(np.asarray(x) < 0.5 * 2 ** k + 1e-12, 0.0, 10.0)  # noqa: E731
    assert equicontinuity_modulus(chain, jump, 1.0, levels=[0, 1]) == FAILS


def test_symbol_potential_declared_modulus_is_conservative():
    f = symbol_potential(lambda k: [0.0, 1.0])
    sys = make_na_shift(ShiftSpec((2,) * 8, 8))
    # words closer than 1 share their first symbol
    assert equicontinuity_modulus(sys, f, 0.5, levels=[0, 1, 2]) == 1.0
    assert math.isclose(f.modulus(0.1), 0.5)
