import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from firefront.ensemble import (HyperPriors, MemberError, hdi_bounds, hdi_interval, member_seed, run_ensemble,
                                sample_hyperparams, summarize, window_size)
from firefront.grid import GridSpec, ScalarField
from oracles import hdi_by_enumeration

SMALL = HyperPriors(J_set=(20, 30), n_ensemble=12)


class TestPriors:
    def test_defaults(self):
        p = HyperPriors()
        assert p.a_set == (0.1, 0.5, 1.0)
        assert len(p.alpha_set) == 20 and p.alpha_set[0] == 0.01 and p.alpha_set[-1] == 1.0
        assert p.alpha_set[1] == pytest.approx(0.0621, abs=1e-4)
        assert p.nu_set == (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
        assert len(p.tau_set) == 10 and p.tau_set[1] == pytest.approx(1.112, abs=1e-3)
        assert p.J_set == tuple(range(50, 101))
        assert (p.pi_w, p.pi_u, p.n_ensemble) == (0.3, 0.5, 3000)

    def test_empty_set(self):
        with pytest.raises(ValueError):
            HyperPriors(nu_set=())

    def test_dict_round_trip(self):
        p = HyperPriors(J_set=(5, 6), n_ensemble=7)
        assert HyperPriors.from_dict(p.to_dict()) == p
        with pytest.raises(ValueError):
            HyperPriors.from_dict({"bogus": 1})


class TestSampleHyperparams:
    def test_singletons(self):
        p = HyperPriors(a_set=(0.5,), alpha_set=(0.3,), nu_set=(0.4,), tau_set=(2.0,), J_set=(17,))
        hp = sample_hyperparams(p, 123)
        assert (hp.a_w, hp.a_u, hp.alpha_leak, hp.nu, hp.tau_ridge, hp.J) == (0.5, 0.5, 0.3, 0.4, 2.0, 17)

    def test_support_and_frequency(self):
        p = HyperPriors()
        draws = [sample_hyperparams(p, s) for s in range(10_000)]
        for hp in draws:
            assert hp.a_w in p.a_set and hp.a_u in p.a_set and hp.alpha_leak in p.alpha_set
            assert hp.nu in p.nu_set and hp.tau_ridge in p.tau_set and hp.J in p.J_set
        a_w = np.array([hp.a_w for hp in draws])
        for v in p.a_set:
            assert abs(np.mean(a_w == v) - 1 / 3) <= 0.02

    def test_deterministic(self):
        assert sample_hyperparams(HyperPriors(), 5) == sample_hyperparams(HyperPriors(), 5)

    def test_member_seeds_distinct(self):
        seeds = {member_seed(42, k) for k in range(3000)}
        assert len(seeds) == 3000
        assert member_seed(42, 0) != member_seed(43, 0)


class TestHdi:
    def test_example(self):
        assert window_size(4, 0.25) == 3
        assert hdi_interval([0, 1, 2, 10], 0.25) == (0.0, 2.0)

    def test_all_equal(self):
        assert hdi_interval([3.5] * 7, 0.1) == (3.5, 3.5)

    def test_tiny_alpha_is_full_range(self):
        assert hdi_interval([4, -1, 2, 9], 1e-9) == (-1.0, 9.0)

    def test_single_sample(self):
        assert hdi_interval([2.0], 0.05) == (2.0, 2.0)

    def test_empty(self):
        with pytest.raises(ValueError):
            hdi_interval([], 0.05)

    def test_tie_goes_to_smallest_lower(self):
        assert hdi_interval([0, 1, 2, 3], 0.5) == (0.0, 1.0)

    def test_window_size_exact_products(self):
        # (1 - 0.05) * 20 is 19 in exact arithmetic
        assert window_size(20, 0.05) == 19
        assert window_size(500, 0.05) == 475

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.integers(-5, 5), min_size=1, max_size=20), st.sampled_from([0.05, 0.1, 0.25]))
    def test_matches_enumeration_with_ties(self, xs, alpha):
        assert hdi_interval(xs, alpha) == hdi_by_enumeration(xs, alpha)

    def test_columnwise_equals_scalar(self):
        rng = np.random.default_rng(0)
        M = rng.normal(size=(25, 40))
        lo, hi = hdi_bounds(M, 0.1)
        for j in range(40):
            assert (lo[j], hi[j]) == hdi_interval(M[:, j], 0.1)


class TestSummary:
    G = GridSpec(3, 3, 0, 1, 0, 1)

    def test_single_member(self):
        m = np.arange(9, dtype=float)[None, :]
        ens = summarize(m, self.G, 0.05)
        assert np.array_equal(ens.median.values, m[0])
        assert np.array_equal(ens.lower.values, m[0]) and np.array_equal(ens.upper.values, m[0])

    def test_even_median_averages(self):
        m = np.array([[0.0] * 9, [1.0] * 9])
        assert np.all(summarize(m, self.G, 0.05).median.values == 0.5)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(1)
        m = rng.normal(size=(30, 9))
        a = summarize(m, self.G, 0.1)
        b = summarize(m[rng.permutation(30)], self.G, 0.1)
        for name in ("median", "lower", "upper"):
            assert np.array_equal(getattr(a, name).values, getattr(b, name).values)

    def test_coverage_minimality_hull(self):
        rng = np.random.default_rng(2)
        for n in (5, 17, 50):
            m = rng.standard_t(2, size=(n, 9))
            ens = summarize(m, self.G, 0.1)
            need = math.ceil(0.9 * n - 1e-9)
            inside = (m >= ens.lower.values) & (m <= ens.upper.values)
            assert np.all(inside.sum(axis=0) >= need)
            assert np.all(ens.lower.values <= ens.upper.values)
            assert np.all(m.min(axis=0) <= ens.median.values) and np.all(ens.median.values <= m.max(axis=0))
            x = np.sort(m, axis=0)
            for j in range(9):
                widths = [x[i + need - 1, j] - x[i, j] for i in range(n - need + 1)]
                assert ens.upper.values[j] - ens.lower.values[j] == min(widths)

    def test_outlier_is_excluded(self):
        # 39 -> 40 members keeps the window at 38, so only the outlier is new
        rng = np.random.default_rng(3)
        m = rng.normal(size=(39, 9))
        assert window_size(39, 0.05) == window_size(40, 0.05) == 38
        base = summarize(m, self.G, 0.05)
        out = summarize(np.vstack([m, np.full((1, 9), 1e6)]), self.G, 0.05)
        assert np.array_equal(base.lower.values, out.lower.values)
        assert np.array_equal(base.upper.values, out.upper.values)


class TestRunEnsemble:
    def test_reproducible(self, canonical):
        phis = canonical.phis[:6]
        a = run_ensemble(phis, SMALL, 0.1, master_seed=3)
        b = run_ensemble(phis, SMALL, 0.1, master_seed=3)
        assert a.members.tobytes() == b.members.tobytes()
        assert a.hyperparams == b.hyperparams and a.seeds == b.seeds

    def test_workers_do_not_change_result(self, canonical):
        phis = canonical.phis[:6]
        a = run_ensemble(phis, SMALL, 0.1, master_seed=3, workers=1)
        b = run_ensemble(phis, SMALL, 0.1, master_seed=3, workers=2)
        assert a.members.tobytes() == b.members.tobytes()

    def test_single_member(self, canonical):
        ens = run_ensemble(canonical.phis[:5], replace(SMALL, n_ensemble=1), 0.05, master_seed=0)
        assert np.array_equal(ens.median.values, ens.members[0])
        assert np.array_equal(ens.lower.values, ens.upper.values)

    def test_too_few_observations(self, canonical):
        with pytest.raises(ValueError):
            run_ensemble(canonical.phis[:2], SMALL, 0.05, master_seed=0)

    def test_failure_names_member(self, canonical):
        degenerate = replace(SMALL, pi_w=0.0)
        with pytest.raises(MemberError, match="member 0"):
            run_ensemble(canonical.phis[:5], degenerate, 0.05, master_seed=0)

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_nonfinite_data_fails_with_index(self):
        g = GridSpec(3, 3, 0, 1, 0, 1)
        phis = [ScalarField.constant(g, 1e308)] * 2 + [ScalarField.constant(g, -1e308)] * 2
        with pytest.raises(MemberError) as info:
            run_ensemble(phis, SMALL, 0.05, master_seed=0)
        assert info.value.index == 0
