import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import exponential_field, two_class_reference
from tasep_hydro.field import from_events, sample_field
from tasep_hydro.multiclass import (
    TwoClassConfiguration,
    couple,
    cut,
    evolve_two_class,
    isolated_second_class,
    leftmost_second_class,
    rightmost_second_class,
    tagged_pair,
    tagged_second_class,
    two_class_from_pair,
)
from tasep_hydro.tasep import Configuration, ProfileSpec, evolve, init_product


def cfg(bits, offset=0):
    return Configuration(offset, np.array(bits, dtype=np.uint8))


def tc(labels, offset=0):
    return TwoClassConfiguration(offset, np.array(labels, dtype=np.int8))


class TestCouple:
    def test_identical_inputs(self):
        c = init_product(ProfileSpec.constant(0.5), (-30, 30), 2)
        a, b = couple(c, c, sample_field(-30, 30, 5.0, 2), 5.0)
        assert a == b

    def test_hand_stepped(self):
        f = from_events(0, 2, 1.0, [(0, 0.5)])
        a, b = couple(cfg([1, 0, 0]), cfg([1, 0, 1]), f, 1.0)
        assert a == cfg([0, 1, 0]) and b == cfg([0, 1, 1])

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    def test_attractive_and_conserving(self, seed, p, q):
        p, q = sorted((p, q))
        lo = init_product(ProfileSpec.constant(p), (-60, 60), seed)
        hi = init_product(ProfileSpec.constant(q), (-60, 60), seed)
        f = sample_field(-60, 60, 10.0, seed + 1)
        for t in (2.5, 10.0):
            a, b = couple(lo, hi, f, t)
            assert a <= b
            assert (b.occupancy != a.occupancy).sum() == (hi.occupancy != lo.occupancy).sum()
            assert a == evolve(lo, f, t) and b == evolve(hi, f, t)

    def test_window_mismatch(self):
        with pytest.raises(ValueError):
            couple(cfg([1, 0]), cfg([1, 0, 0]), from_events(0, 1, 1.0, []), 1.0)


class TestPairs:
    def test_equal_pair_has_no_second_class(self):
        c = cfg([1, 0, 1])
        assert (two_class_from_pair(c, c).labels != 2).all()

    def test_empty_low(self):
        c = cfg([1, 0, 1])
        assert two_class_from_pair(cfg([0, 0, 0]), c).labels.tolist() == [2, 0, 2]

    def test_mixed(self):
        assert two_class_from_pair(cfg([1, 0, 0]), cfg([1, 1, 0])).labels.tolist() == [1, 2, 0]

    def test_ordering_violated(self):
        with pytest.raises(ValueError):
            two_class_from_pair(cfg([1, 1, 0]), cfg([1, 0, 0]))

    def test_marginals(self):
        t = tc([1, 2, 0, 2, 1])
        assert t.sigma == cfg([1, 0, 0, 0, 1])
        assert t.xi == cfg([0, 1, 0, 1, 0])
        assert t.high == cfg([1, 1, 0, 1, 1])


class TestTwoClassRules:
    def test_first_overtakes_second(self):
        out = evolve_two_class(tc([1, 2]), from_events(0, 1, 1.0, [(0, 0.5)]), 1.0)
        assert out.labels.tolist() == [2, 1]

    def test_second_does_not_push_first(self):
        out = evolve_two_class(tc([2, 1]), from_events(0, 1, 1.0, [(0, 0.5)]), 1.0)
        assert out.labels.tolist() == [2, 1]

    def test_second_jumps_into_hole(self):
        out = evolve_two_class(tc([2, 0]), from_events(0, 1, 1.0, [(0, 0.5)]), 1.0)
        assert out.labels.tolist() == [0, 2]

    def test_same_class_blocked(self):
        for lab in ([1, 1], [2, 2], [0, 1], [0, 2], [0, 0]):
            out = evolve_two_class(tc(lab), from_events(0, 1, 1.0, [(0, 0.5)]), 1.0)
            assert out.labels.tolist() == lab

    def test_tracked_instance_moves_left_when_overtaken(self):
        f = from_events(0, 2, 1.0, [(0, 0.3), (1, 0.6)])
        out, (tr,) = evolve_two_class(tc([1, 2, 0]), f, 1.0, track=(1,))
        assert out.labels.tolist() == [2, 0, 1]
        assert tr.sites.tolist() == [1, 0] and tr.times.tolist() == [0.0, 0.3]

    @settings(max_examples=80, deadline=None)
    @given(st.integers(0, 2**32), st.integers(3, 30), st.floats(0.5, 6.0))
    def test_matches_reference(self, seed, n, horizon):
        rng = np.random.default_rng(seed)
        lab = rng.integers(0, 3, n + 1).astype(np.int8)
        lab[n // 2] = 2
        b, t = exponential_field(n, 0, horizon, rng)
        f = from_events(0, n, horizon, zip(b.tolist(), t.tolist()))
        out, (tr,) = evolve_two_class(tc(lab), f, horizon, track=(n // 2,))
        ref, (rt, rx) = two_class_reference(lab, 0, b, t, horizon, tracked=n // 2)
        np.testing.assert_array_equal(out.labels, ref)
        np.testing.assert_array_equal(tr.times, rt)
        np.testing.assert_array_equal(tr.sites, rx)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    def test_marginal_consistency(self, seed, p, q):
        p, q = sorted((p, q))
        low = init_product(ProfileSpec.constant(p), (-70, 70), seed)
        high = init_product(ProfileSpec.constant(q), (-70, 70), seed)
        f = sample_field(-70, 70, 12.0, seed)
        out = evolve_two_class(two_class_from_pair(low, high), f, 12.0)
        assert out.sigma == evolve(low, f, 12.0)
        assert out.high == evolve(high, f, 12.0)

    def test_window_mismatch(self):
        with pytest.raises(ValueError):
            evolve_two_class(tc([1, 2, 0]), from_events(0, 1, 1.0, []), 1.0)

    def test_track_needs_second_class(self):
        with pytest.raises(ValueError):
            evolve_two_class(tc([1, 2, 0]), from_events(0, 2, 1.0, []), 1.0, track=(0,))


class TestCut:
    def test_cut_second_class(self):
        t = tc([2, 1, 0, 2, 1], -2)
        assert cut(t, 0).second_class_sites().tolist() == [1]
        assert cut(t, 0).sigma == t.sigma

    def test_cut_left_of_window_is_identity(self):
        t = tc([2, 1, 0, 2], 0)
        assert cut(t, 0) == t
        assert cut(t, -5) == t
        c = cfg([1, 1, 0], 3)
        assert cut(c, 2) == c

    def test_cut_configuration(self):
        assert cut(cfg([1, 1, 0, 1], -2), 0) == cfg([0, 0, 0, 1], -2)
        assert cut(cfg([0, 0, 0]), 1) == cfg([0, 0, 0])

    def test_extremes(self):
        t = tc([2, 1, 0, 2, 1], -2)
        assert leftmost_second_class(t) == -2 and rightmost_second_class(t) == 1
        with pytest.raises(ValueError):
            rightmost_second_class(tc([1, 0]))

    def test_cut_commutes(self):
        for seed in range(20):
            low, high = tagged_pair(0.3, 0.7, (-80, 80), seed)
            f = sample_field(-80, 80, 15.0, seed)
            t0 = two_class_from_pair(low, high)
            tT, (y,) = evolve_two_class(t0, f, 15.0, track=(0,))
            assert evolve_two_class(cut(t0, 0), f, 15.0) == cut(tT, y.final)


class TestTrackedSecondClass:
    def test_isolated_without_events(self):
        tr, _ = isolated_second_class(0.5, (-5, 5), 1.0, (1, 2), field=from_events(-5, 5, 1.0, []))
        assert tr.final == 0 and tr.start == 0

    def test_lone_second_class_moves_like_a_particle(self):
        f = from_events(-5, 5, 1.0, [(0, 0.2)])
        tr, fin = isolated_second_class(1e-12, (-5, 5), 1.0, (1, 2), field=f)
        assert tr.at(0.1) == 0 and tr.at(0.2) == 1 and tr.final == 1
        assert fin.second_class_sites().tolist() == [1]

    def test_unique_discrepancy(self):
        tr, fin = isolated_second_class(0.5, (-200, 200), 30.0, (4, 5))
        assert fin.second_class_sites().tolist() == [tr.final]
        assert set(np.diff(tr.sites).tolist()) <= {-1, 1}

    def test_tagged_without_events(self):
        tr, _ = tagged_second_class(0.2, 0.8, (-5, 5), 1.0, (1, 2), field=from_events(-5, 5, 1.0, []))
        assert tr.final == 0

    def test_tagged_blocked_by_second_class(self):
        f = from_events(-5, 5, 1.0, [(0, 0.5)])
        tr, fin = tagged_second_class(0.0, 1.0, (-5, 5), 1.0, (1, 2), field=f)
        assert tr.final == 0
        assert fin[0] == 2 and fin[1] == 2
        # the density-one draw fills the window, so every site left of 0 is
        # second class too
        assert (fin.labels == 2).all()

    def test_invalid(self):
        with pytest.raises(ValueError):
            isolated_second_class(0.0, (-5, 5), 1.0, (1, 2))
        with pytest.raises(ValueError):
            tagged_second_class(0.5, 0.5, (-5, 5), 1.0, (1, 2))

    def test_dumps(self):
        t = tc([2, 1, 0, 2], -1)
        assert t.dumps() == "offset -1\n2102\n"
        assert TwoClassConfiguration.loads(t.dumps()) == t
