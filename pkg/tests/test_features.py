import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import seeds
from gmchoice.chain import choice_probabilities
from gmchoice.features import build_feature_chain_general, build_feature_chain_mnl


def mnl_probs(beta, X, S):
    w = np.exp(X @ beta)
    denom = w[0] + w[list(S)].sum()
    pi = np.zeros(X.shape[0])
    pi[0] = w[0] / denom
    for i in S:
        pi[i] = w[i] / denom
    return pi


def subsets(n, max_size=None):
    top = n if max_size is None else max_size
    for r in range(top + 1):
        yield from itertools.combinations(range(1, n + 1), r)


def test_zero_beta_is_uniform(rng):
    X = rng.normal(size=(5, 2))
    model = build_feature_chain_mnl(np.zeros(2), X)
    for S in [(1,), (1, 2), (1, 2, 3, 4)]:
        pi = choice_probabilities(model, S)
        assert all(pi[i] == pytest.approx(1 / (len(S) + 1), abs=1e-12) for i in S)


def test_self_transition_excluded(rng):
    model = build_feature_chain_mnl(rng.normal(size=3), rng.normal(size=(6, 3)))
    assert np.all(np.diag(model.rho[:, 1:]) == 0.0)


def test_mnl_representation_small_sets(rng):
    beta = rng.normal(size=3)
    X = rng.normal(size=(7, 3))
    model = build_feature_chain_mnl(beta, X)
    for S in subsets(6, max_size=3):
        np.testing.assert_allclose(choice_probabilities(model, S), mnl_probs(beta, X, S), atol=1e-10)


@given(seed=seeds, n=st.integers(2, 8), d=st.integers(1, 3))
def test_mnl_representation_all_sets(seed, n, d):
    rng = np.random.default_rng(seed)
    beta = rng.normal(size=d)
    X = rng.normal(size=(n + 1, d))
    model = build_feature_chain_mnl(beta, X)
    for S in subsets(n):
        np.testing.assert_allclose(choice_probabilities(model, S), mnl_probs(beta, X, S), atol=1e-10)


def test_common_shift_invariance(rng):
    beta = rng.normal(size=2)
    X = rng.normal(size=(5, 2))
    shifted = X + np.array([3.0, -1.5])
    a, b = build_feature_chain_mnl(beta, X), build_feature_chain_mnl(beta, shifted)
    for S in subsets(4):
        np.testing.assert_allclose(choice_probabilities(a, S), choice_probabilities(b, S), atol=1e-12)


def test_general_collapses_to_mnl(rng):
    beta = rng.normal(size=3)
    X = rng.normal(size=(6, 3))
    a = build_feature_chain_mnl(beta, X)
    b = build_feature_chain_general(beta, beta, beta, X)
    np.testing.assert_allclose(a.lam, b.lam, atol=1e-15)
    np.testing.assert_allclose(a.rho, b.rho, atol=1e-15)


def test_general_zero_is_uniform(rng):
    X = rng.normal(size=(4, 2))
    model = build_feature_chain_general(np.zeros(2), np.zeros(2), np.zeros(2), X)
    np.testing.assert_allclose(model.lam, 0.25)
    np.testing.assert_allclose(model.rho[:, 1:][~np.eye(3, dtype=bool)], 1 / 3)


def test_asymmetric_weights_break_iia():
    X = np.array([[0.0], [1.0], [-1.0], [2.0]])
    model = build_feature_chain_general([0.0], [2.0], [-1.0], X)
    ratios = []
    for S in subsets(3):
        if 1 in S and 2 in S:
            pi = choice_probabilities(model, S)
            ratios.append(pi[1] / pi[2])
    assert max(ratios) - min(ratios) > 1e-3


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        build_feature_chain_mnl(np.zeros(3), np.zeros((4, 2)))
    with pytest.raises(ValueError):
        build_feature_chain_general(np.zeros(2), np.zeros(2), np.zeros(3), np.zeros((4, 2)))
