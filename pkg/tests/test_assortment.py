import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import seeds
from gmchoice.assortment import (
    FptasConfig,
    Method,
    ResourceGuardError,
    brute_force_gmnl,
    brute_force_optimal,
    build_partition_instance_large_alpha,
    build_partition_instance_small_alpha,
    exact_weight_knapsack,
    fptas_gmnl,
    fptas_lowrank,
    guess_grid,
    has_partition,
    knapsack_max,
    nominal_dp_states,
    pick_best,
)
from gmchoice.gmnl import GmnlModel, gmnl_revenue, homogeneous_model, random_gmnl_model
from gmchoice.lowrank import LowRankModel, lowrank_revenue, random_lowrank_model


def gmnl_oracle(model, prices):
    return brute_force_optimal(lambda S: gmnl_revenue(model, S, prices), model.n)


def enumerate_knapsack(values, weights, capacity):
    best = 0.0
    for r in range(len(values) + 1):
        for S in itertools.combinations(range(len(values)), r):
            if weights[list(S)].sum() <= capacity:
                best = max(best, values[list(S)].sum())
    return best


class TestBruteForce:
    def test_single_product(self, rng):
        model = random_gmnl_model(1, rng)
        res = brute_force_gmnl(model, [3.0])
        assert res.assortment == (1,) and res.revenue > 0

    def test_homogeneous(self):
        res = brute_force_gmnl(homogeneous_model(15, 2.0), np.ones(15))
        assert res.assortment == tuple(range(1, 9))
        assert res.method is Method.BRUTE_FORCE

    @given(seed=seeds, n=st.integers(1, 9))
    def test_class_enumeration_matches_generic(self, seed, n):
        rng = np.random.default_rng(seed)
        model = random_gmnl_model(n, rng)
        prices = rng.choice([1.0, 2.0, 3.0], size=n)
        a, b = brute_force_gmnl(model, prices), gmnl_oracle(model, prices)
        assert a.assortment == b.assortment
        assert a.revenue == pytest.approx(b.revenue, rel=1e-12)

    def test_ties_use_lexicographic_order(self):
        assert pick_best([(1.0, (2,)), (1.0, (1, 3)), (0.5, ())]) == (1.0, (1, 3))

    def test_guard(self):
        with pytest.raises(ResourceGuardError):
            brute_force_optimal(lambda S: 0.0, 23)

    @pytest.mark.parametrize("seed", range(20))
    def test_highest_price_in_optimum(self, seed):
        rng = np.random.default_rng(seed)
        model = random_gmnl_model(8, rng, alpha=rng.uniform(0, 1))
        prices = rng.uniform(1, 10, 8)
        assert int(np.argmax(prices)) + 1 in brute_force_gmnl(model, prices).assortment


class TestKnapsack:
    @given(seed=seeds, n=st.integers(1, 8), capacity=st.integers(0, 30))
    def test_matches_enumeration(self, seed, n, capacity):
        rng = np.random.default_rng(seed)
        values = rng.uniform(0, 5, n)
        weights = rng.integers(1, 10, n)
        value, S = knapsack_max(values, weights, capacity)
        assert value == pytest.approx(enumerate_knapsack(values, weights, capacity), abs=1e-12)
        idx = np.array(S, dtype=int) - 1
        assert weights[idx].sum() <= capacity
        assert values[idx].sum() == pytest.approx(value, abs=1e-12)

    def test_tie_excludes(self):
        _, S = knapsack_max(np.array([1.0, 0.0]), np.array([1, 1]), 5)
        assert S == (1,)

    @given(seed=seeds, n=st.integers(1, 6), K=st.integers(1, 2))
    def test_exact_weight_matches_enumeration(self, seed, n, K):
        rng = np.random.default_rng(seed)
        values = rng.uniform(0, 5, n)
        weights = rng.integers(0, 5, (n, K))
        lower, upper = 3, 8
        best = None
        for r in range(n + 1):
            for S in itertools.combinations(range(n), r):
                w = weights[list(S)].sum(axis=0)
                if np.all((w >= lower) & (w <= upper)):
                    best = max(best or -np.inf, values[list(S)].sum())
        S = exact_weight_knapsack(values, weights, lower, upper)
        if best is None:
            assert S is None
        else:
            idx = np.array(S, dtype=int) - 1
            w = weights[idx].sum(axis=0)
            assert np.all((w >= lower) & (w <= upper))
            assert values[idx].sum() == pytest.approx(best, abs=1e-12)

    def test_grid_reaches_top(self):
        grid = guess_grid(0.01, 0.2, 10, 0.1)
        assert grid[0] == 0.01 and grid[-1] >= 10 * 0.2 and grid[-2] < 10 * 0.2


class TestFptasGmnl:
    def test_single_product(self, rng):
        res = fptas_gmnl(random_gmnl_model(1, rng), [2.0], FptasConfig(0.1))
        assert res.assortment == (1,)

    def test_homogeneous(self):
        model = homogeneous_model(12, 2.0)
        opt = brute_force_gmnl(model, np.ones(12)).revenue
        res = fptas_gmnl(model, np.ones(12), FptasConfig(0.1))
        assert res.revenue >= 0.99 * opt
        assert res.method is Method.FPTAS_RANK1

    @settings(max_examples=25)
    @given(seed=seeds, n=st.integers(2, 9), eps=st.sampled_from([0.05, 0.1, 0.25]))
    def test_guarantee_and_dominance(self, seed, n, eps):
        rng = np.random.default_rng(seed)
        model = random_gmnl_model(n, rng)
        prices = rng.uniform(1, 10, n)
        opt = brute_force_gmnl(model, prices).revenue
        res = fptas_gmnl(model, prices, FptasConfig(eps))
        assert res.revenue <= opt * (1 + 1e-12)
        assert res.revenue >= (1 - 5 * eps) * opt
        assert res.revenue == pytest.approx(gmnl_revenue(model, res.assortment, prices), rel=1e-12)

    def test_parallel_guesses_identical(self, rng):
        model = random_gmnl_model(10, rng)
        prices = rng.uniform(1, 10, 10)
        a = fptas_gmnl(model, prices, FptasConfig(0.1))
        b = fptas_gmnl(model, prices, FptasConfig(0.1, parallel_guesses=True, threads=4))
        assert a == b

    def test_rejects_bad_epsilon(self):
        with pytest.raises(ValueError):
            FptasConfig(0.0)


class TestFptasLowRank:
    def test_rank_one_cross_check(self, rng):
        n = 6
        v = np.empty(n + 1)
        v[1:] = rng.uniform(0.1, 1.0, n) / n
        v[0] = 1 - v[1:].sum()
        lr = LowRankModel(U=np.ones((n, 1)), V=v[:, None], lam=v, alpha=1.0)
        gm = GmnlModel(v=v, alpha=1.0)
        prices = rng.uniform(1, 10, n)
        opt = brute_force_gmnl(gm, prices).revenue
        for res in (fptas_lowrank(lr, prices, FptasConfig(0.25)), fptas_gmnl(gm, prices, FptasConfig(0.25))):
            assert (1 - 5 * 0.25) * opt <= res.revenue <= opt * (1 + 1e-12)

    @pytest.mark.parametrize("seed", range(3))
    def test_guarantee(self, seed):
        rng = np.random.default_rng(seed)
        model = random_lowrank_model(6, 2, rng)
        prices = rng.uniform(1, 10, 6)
        opt = brute_force_optimal(lambda S: lowrank_revenue(model, S, prices), 6).revenue
        res = fptas_lowrank(model, prices, FptasConfig(0.25))
        assert (1 - 5 * 0.25) * opt <= res.revenue <= opt * (1 + 1e-12)
        assert res.method is Method.FPTAS_RANKK

    def test_state_count_instrumentation(self, rng):
        model = random_lowrank_model(5, 2, rng)
        res = fptas_lowrank(model, np.ones(5), FptasConfig(0.5))
        upper = int(np.ceil(5 / 0.5)) + 5
        assert res.dp_states == res.guesses_evaluated * (upper + 1) ** 2 * 5
        lower = int(np.ceil(5 / 0.5))
        assert nominal_dp_states(model, 0.5) == res.guesses_evaluated * (lower + 1) ** 2 * (upper + 1) ** 2 * 5

    def test_rank_guard(self, rng):
        model = random_lowrank_model(6, 4, rng)
        with pytest.raises(ValueError):
            fptas_lowrank(model, np.ones(6), FptasConfig(0.5))


class TestPartition:
    @pytest.mark.parametrize("c,yes", [((1, 1), True), ((1, 1, 1), False), ((3, 1, 1, 1), True)])
    @pytest.mark.parametrize("build", [build_partition_instance_small_alpha, build_partition_instance_large_alpha])
    def test_examples(self, c, yes, build):
        model, prices, target = build(c)
        opt = brute_force_gmnl(model, prices).revenue
        if yes:
            assert opt == pytest.approx(target, abs=1e-9)
        else:
            assert opt < target - 1e-9

    def test_printed_small_alpha_price_fails(self):
        model, prices, target = build_partition_instance_small_alpha((1, 1, 2), literal=True)
        assert brute_force_gmnl(model, prices).revenue > target + 1e-9

    @given(c=st.lists(st.integers(1, 6), min_size=1, max_size=6))
    def test_equivalence(self, c):
        for build in (build_partition_instance_small_alpha, build_partition_instance_large_alpha):
            model, prices, target = build(c)
            opt = brute_force_gmnl(model, prices).revenue
            assert (abs(opt - target) <= 1e-9) == has_partition(c)
            assert opt <= target + 1e-9

    def test_has_partition(self):
        assert has_partition([3, 1, 1, 1])
        assert not has_partition([1, 1, 1])
        assert not has_partition([2, 5])

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            build_partition_instance_small_alpha([1.5, 2])
        with pytest.raises(ValueError):
            build_partition_instance_small_alpha([1, 1], alpha=2.0)
        with pytest.raises(ValueError):
            build_partition_instance_large_alpha([1, 1], alpha=2.0)
