import numpy as np
import pytest

from conftest import random_chain
from gmchoice.chain import MarkovChainModel, choice_probabilities
from gmchoice.gmnl import gmnl_choice_probabilities, homogeneous_model
from gmchoice.simulate import (
    WalkOutcome,
    fixed_size_sampler,
    generate_dataset,
    no_purchase_curve,
    simulate_walk,
    simulate_walks,
    star_graph_experiment,
    star_graph_model,
    synthetic_features,
    uniform_nonempty_sampler,
)


def point_mass(n, i, alpha, rng):
    base = random_chain(rng, n, alpha=alpha)
    lam = np.zeros(n + 1)
    lam[i] = 1.0
    return MarkovChainModel(lam=lam, rho=base.rho, alpha=alpha)


class TestWalk:
    def test_point_mass_alpha_zero(self, rng):
        model = point_mass(4, 2, 0.0, rng)
        for seed in range(20):
            assert simulate_walk(model, (2, 3), seed) == WalkOutcome(2, 0)
        batch = simulate_walks(model, (2, 3), 1000, seed=1)
        assert np.all(batch.chosen == 2) and np.all(batch.steps == 0)

    def test_empty_assortment(self, rng):
        model = random_chain(rng, 4)
        assert all(simulate_walk(model, (), s).chosen == 0 for s in range(20))
        assert np.all(simulate_walks(model, (), 5000, seed=2).chosen == 0)

    def test_scalar_walk_frequencies(self, rng):
        model = random_chain(rng, 3, alpha=1.0)
        S = (1, 3)
        draws = np.array([simulate_walk(model, S, s).chosen for s in range(20_000)])
        exact = choice_probabilities(model, S)
        freq = np.bincount(draws, minlength=4) / draws.size
        assert np.all(np.abs(freq - exact) <= 4 * np.sqrt(exact * (1 - exact) / draws.size) + 1e-12)

    def test_million_walks(self):
        rng = np.random.default_rng(31)
        model = random_chain(rng, 5, alpha=2.0)
        S = (2, 3, 5)
        exact = choice_probabilities(model, S)
        freq = simulate_walks(model, S, 1_000_000, seed=8).frequencies(5)
        assert np.all(np.abs(freq - exact) <= 3 * np.sqrt(exact * (1 - exact) / 1e6) + 1e-12)

    def test_deterministic_across_threads(self, rng):
        model = random_chain(rng, 6)
        a = simulate_walks(model, (1, 4), 300_000, seed=4, threads=1)
        b = simulate_walks(model, (1, 4), 300_000, seed=4, threads=4)
        c = simulate_walks(model, (1, 4), 300_000, seed=4)
        np.testing.assert_array_equal(a.chosen, b.chosen)
        np.testing.assert_array_equal(a.steps, b.steps)
        np.testing.assert_array_equal(a.chosen, c.chosen)

    def test_termination(self):
        rng = np.random.default_rng(0)
        total = 0
        for _ in range(10):
            model = random_chain(rng, 6)
            batch = simulate_walks(model, (1,), 1_000_000, seed=total)
            total += batch.chosen.size
            assert batch.steps.max() < 10_000
        assert total == 10_000_000

    def test_membership_matrix_shape(self, rng):
        with pytest.raises(ValueError):
            simulate_walks(random_chain(rng, 3), np.ones((4, 2), dtype=bool))
        with pytest.raises(ValueError):
            simulate_walks(random_chain(rng, 3), (1,), 0)


class TestDataset:
    def test_single_known_record(self, rng):
        data = generate_dataset(point_mass(4, 3, 0.0, rng), 1, seed=0, sampler=fixed_size_sampler(4))
        assert list(data.observations()) == [((1, 2, 3, 4), 3)]

    def test_no_purchase_share(self, rng):
        model = random_chain(rng, 5, alpha=1.5)
        data = generate_dataset(model, 200_000, seed=3)
        uniq, inv = np.unique(data.masks, axis=0, return_inverse=True)
        pi0 = np.array([choice_probabilities(model, np.flatnonzero(m) + 1)[0] for m in uniq])
        expected = pi0[inv.ravel()].mean()
        share = data.no_purchase.mean()
        assert abs(share - expected) <= 4 * np.sqrt(expected * (1 - expected) / data.T)

    def test_deterministic(self, rng):
        model = random_chain(rng, 5)
        a, b = generate_dataset(model, 5000, seed=9), generate_dataset(model, 5000, seed=9, threads=4)
        np.testing.assert_array_equal(a.masks, b.masks)
        np.testing.assert_array_equal(a.choices, b.choices)

    def test_samplers(self):
        rng = np.random.default_rng(1)
        masks = uniform_nonempty_sampler(rng, 10_000, 3)
        assert masks.any(axis=1).all()
        codes = masks @ (1 << np.arange(3))
        counts = np.bincount(codes, minlength=8)[1:]
        assert counts.min() > 0.8 * 10_000 / 7
        assert np.all(fixed_size_sampler(2)(rng, 500, 5).sum(axis=1) == 2)
        with pytest.raises(ValueError):
            fixed_size_sampler(6)(rng, 1, 5)

    def test_synthetic_features(self, rng):
        X = synthetic_features(5, 3, rng)
        assert X.shape == (6, 3)
        np.testing.assert_array_equal(X[0], [1, 0, 0])
        assert np.all(X[1:, 0] == 0)


class TestNoPurchaseCurve:
    def test_values_match_closed_form(self):
        ks, table = no_purchase_curve(15, [1.0, 10.0])
        assert list(ks) == list(range(1, 16))
        for row, k in enumerate(ks):
            for col, a in enumerate([1.0, 10.0]):
                pi0 = gmnl_choice_probabilities(homogeneous_model(15, a), range(1, k + 1))[0]
                assert table[row, col] == pytest.approx(pi0, rel=1e-14)

    def test_alpha_zero_strictly_decreasing(self):
        _, table = no_purchase_curve(15, [0.0])
        assert np.all(np.diff(table[:, 0]) < 0)

    def test_choice_overload(self):
        _, table = no_purchase_curve(15, [10.0])
        col = table[:, 0]
        k = int(np.argmin(col))
        assert 0 < k < 14
        assert np.all(np.diff(col[k:]) > 0)

    def test_alpha_one_no_increase(self):
        _, table = no_purchase_curve(15, [1.0])
        assert np.all(np.diff(table[:, 0]) <= 0)

    def test_kmax(self):
        ks, table = no_purchase_curve(10, [1.0, 2.0, 3.0], kmax=4)
        assert table.shape == (4, 3) and ks[-1] == 4
        with pytest.raises(ValueError):
            no_purchase_curve(10, [1.0], kmax=11)


class TestStarGraph:
    def test_model_shape(self):
        model, prices = star_graph_model(10, 0.9, 1.0, 2.0)
        assert model.rho[0, 1] == 0 and model.lam[0] == 0
        assert prices[0] == 0.9 and np.all(prices[1:] == 1.0)

    def test_alpha_zero_keeps_leaves(self):
        res = star_graph_experiment(10, 0.9, 1.0, 0.0)
        assert set(range(2, 11)) <= set(res.assortment)

    def test_large_alpha_centre_only(self):
        assert star_graph_experiment(10, 0.9, 1.0, 9.0).assortment == (1,)

    def test_threshold(self):
        centre = [star_graph_experiment(10, 0.9, 1.0, a).assortment == (1,) for a in range(0, 13)]
        first = centre.index(True)
        assert 0 < first <= 9
        assert all(centre[first:])

    def test_rejects_bad_prices(self):
        with pytest.raises(ValueError):
            star_graph_model(10, 1.0, 0.9, 1.0)
