import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aggdiff.intervals import Interval, interaction_energy, normalize


def iset(*pairs):
    return normalize([Interval(c, r) for c, r in pairs])


raw_interval = st.tuples(
    st.floats(min_value=-10, max_value=10),
    st.floats(min_value=0.01, max_value=3.0),
)
raw_sets = st.lists(raw_interval, min_size=0, max_size=16)
taus = st.floats(min_value=0.0, max_value=30.0)


class TestNormalize:
    def test_touching_endpoints_merge(self):
        u = iset((0, 1), (1.5, 0.5))
        assert len(u) == 1
        assert u.lefts == [-1.0] and u.rights == [2.0]

    def test_identity(self):
        u = iset((3, 1))
        assert u.lefts == [2.0] and u.rights == [4.0]

    def test_nested_union(self):
        u = iset((0, 1), (0.5, 0.2))
        assert u.lefts == [-1.0] and u.rights == [1.0]

    def test_nonpositive_radius_rejected(self):
        with pytest.raises(ValueError):
            Interval(0.0, 0.0)
        with pytest.raises(ValueError):
            normalize([(0.0, -1.0)])

    @given(raw_sets)
    def test_measure_equals_union_measure(self, pairs):
        u = normalize(pairs)
        # brute-force union measure on a fine sweep of endpoints
        events = sorted(
            set(
                [c - r for c, r in pairs]
                + [c + r for c, r in pairs]
            )
        )
        total = 0.0
        for a, b in zip(events[:-1], events[1:]):
            mid = 0.5 * (a + b)
            if any(c - r < mid < c + r for c, r in pairs):
                total += b - a
        assert u.measure() == pytest.approx(total, abs=1e-12)


class TestNextEvent:
    def test_two_approaching_intervals(self):
        assert iset((-2, 0.5), (3, 0.5)).next_event() == pytest.approx(2.0)

    def test_centered_fixed_point(self):
        assert iset((0, 1)).next_event() is None

    def test_single_arrival(self):
        assert iset((3, 1)).next_event() == pytest.approx(3.0)

    def test_empty(self):
        assert normalize([]).next_event() is None


class TestAdvance:
    def test_unit_speed_toward_origin(self):
        u = iset((3, 1)).advance(1.0)
        assert u.lefts == [1.0] and u.rights == [3.0]

    def test_single_interval_arrival(self):
        u = iset((3, 1)).advance(5.0)
        assert u.lefts == [-1.0] and u.rights == [1.0]

    def test_merge_then_arrival(self):
        u = iset((-2, 0.5), (3, 0.5))
        mid = u.advance(2.25)
        # merged at tau=2 into I(0.5, 1), by 2.25 moved to I(0.25, 1)
        assert mid.lefts == pytest.approx([-0.75]) and mid.rights == pytest.approx([1.25])
        final = u.advance(3.0)
        assert final.lefts == pytest.approx([-1.0]) and final.rights == pytest.approx([1.0])

    def test_simultaneous_arrival_and_merge(self):
        # at tau=2 the left interval arrives at 0 exactly as both touch;
        # processing order must not change the outcome
        u = iset((-2, 0.5), (3, 0.5))
        direct = u.advance(2.0)
        stepped = u.advance(2.0 - 1e-9).advance(1e-9)
        assert len(direct) == len(stepped) == 1
        assert direct.lefts[0] == pytest.approx(stepped.lefts[0], abs=1e-8)
        assert direct.measure() == pytest.approx(2.0, abs=1e-12)

    def test_stationary_interval_absorbs_mover(self):
        u = iset((0, 1), (3, 1))
        # touch at tau=1: (-1,1) and (1,3) -> I(1,2); arrival at tau=3
        v = u.advance(3.0)
        assert v.lefts == pytest.approx([-2.0]) and v.rights == pytest.approx([2.0])

    @given(raw_sets, taus)
    @settings(max_examples=300, deadline=None)
    def test_measure_preserved(self, pairs, tau):
        u = normalize(pairs)
        assert u.advance(tau).measure() == pytest.approx(u.measure(), abs=1e-12)

    @given(raw_sets, st.floats(min_value=0.0, max_value=15.0), st.floats(min_value=0.0, max_value=15.0))
    @settings(max_examples=300, deadline=None)
    def test_semigroup(self, pairs, s, t):
        u = normalize(pairs)
        one = u.advance(s + t)
        two = u.advance(s).advance(t)
        assert len(one) == len(two)
        for a, b in zip(one.lefts, two.lefts):
            assert a == pytest.approx(b, abs=1e-12)
        for a, b in zip(one.rights, two.rights):
            assert a == pytest.approx(b, abs=1e-12)

    @given(raw_sets, taus, st.randoms(use_true_random=False))
    @settings(max_examples=200, deadline=None)
    def test_monotone_under_inclusion(self, pairs, tau, rng):
        big = normalize(pairs)
        # carve a subset: shrink every interval and drop some
        sub = []
        for iv in big:
            if rng.random() < 0.3:
                continue
            shrink = rng.uniform(0.0, 0.9) * iv.radius
            sub.append(Interval(iv.center, iv.radius - shrink))
        small = normalize(sub)
        a1 = small.advance(tau)
        a2 = big.advance(tau)
        for a, b in zip(a1.lefts, a1.rights):
            for frac in (0.01, 0.5, 0.99):
                x = a + frac * (b - a)
                assert a2.contains(x, slack=1e-9)

    @given(raw_sets)
    @settings(max_examples=100, deadline=None)
    def test_long_time_limit_is_centered(self, pairs):
        u = normalize(pairs)
        if len(u) == 0:
            return
        span = max(abs(u.lefts[0]), abs(u.rights[-1]))
        v = u.advance(2.0 * span + 1.0)
        assert v.is_centered()
        assert v.measure() == pytest.approx(u.measure(), abs=1e-12)

    def test_centered_interval_is_fixed(self):
        u = iset((0, 1.5))
        for tau in (0.1, 1.0, 40.0):
            v = u.advance(tau)
            assert v.lefts == u.lefts and v.rights == u.rights


class TestInteractionEnergy:
    def test_gaussian_pair_value(self):
        # closed form via s = x - y tent weight: spot-check against a
        # dense Riemann double sum
        K = lambda s: math.exp(-s * s)
        u1, u2 = iset((-1, 0.5)), iset((1, 0.5))
        val = interaction_energy(u1, u2, K)
        n = 400
        acc = 0.0
        for i in range(n):
            x = -1.5 + (i + 0.5) / n
            for j in range(n):
                y = 0.5 + (j + 0.5) / n
                acc += K(x - y)
        acc /= n * n
        assert val == pytest.approx(acc, rel=1e-4)

    def test_derivative_lower_bound(self):
        # opposite-sign centers: right derivative bounded below by the
        # min-slope estimate c_w * min(r1, r2) * |c2 - c1|
        K = lambda s: math.exp(-s * s)
        u1, u2 = iset((-1, 0.5)), iset((1, 0.5))
        h = 1e-3
        i0 = interaction_energy(u1, u2, K)
        i1 = interaction_energy(u1.advance(h), u2.advance(h), K)
        slope = (i1 - i0) / h
        c_w = min(2 * r * math.exp(-r * r) for r in (1.0, 3.0))
        assert slope >= c_w * 0.5 * 2.0

    def test_same_side_constant(self):
        K = lambda s: math.exp(-s * s)
        u1, u2 = iset((2, 0.5)), iset((4, 0.5))
        h = 1e-4
        i0 = interaction_energy(u1, u2, K)
        i1 = interaction_energy(u1.advance(h), u2.advance(h), K)
        assert (i1 - i0) / h == pytest.approx(0.0, abs=1e-9)
