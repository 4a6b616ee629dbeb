"""Feature-parameterised Markov chains.

Both builders take a ``(n+1) x d`` feature matrix whose row 0 describes the
no-purchase option. Transitions out of product ``i`` are normalised over all
states except ``i`` itself.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray
from scipy.special import softmax

from gmchoice.chain import MarkovChainModel


def _check(features, *betas) -> NDArray[np.float64]:
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("features must be a (n+1) x d matrix with a row for state 0")
    for b in betas:
        if np.shape(b) != (X.shape[1],):
            raise ValueError(f"parameter of shape {np.shape(b)} does not match d={X.shape[1]}")
    return X


def _transition_rows(logits: NDArray[np.float64]) -> NDArray[np.float64]:
    # logits: n x (n+1); product i (row i-1) may not transition to itself
    n = logits.shape[0]
    logits = logits.copy()
    logits[np.arange(n), np.arange(1, n + 1)] = -np.inf
    return softmax(logits, axis=1)


def build_feature_chain_mnl(beta, features, alpha: float = 0.0) -> MarkovChainModel:
    """Chain with ``lam_i ~ exp(b.x_i)`` and ``rho_ij ~ exp(b.(x_j - x_i))``.

    With ``alpha = 0`` this reproduces MNL choice probabilities with
    attractions ``exp(b.x_j)`` exactly.
    """
    X = _check(features, beta)
    u = X @ np.asarray(beta, dtype=np.float64)
    lam = softmax(u)
    logits = u[None, :] - u[1:, None]
    return MarkovChainModel(lam=lam, rho=_transition_rows(logits), alpha=alpha)


def build_feature_chain_general(beta0, beta1, beta2, features, alpha: float = 0.0) -> MarkovChainModel:
    """Chain whose transitions weigh feature gains and losses separately.

    ``rho_ij ~ exp(beta1 . max(x_j - x_i, 0) + beta2 . min(x_j - x_i, 0))``
    elementwise, and ``lam_i ~ exp(beta0 . x_i)``. Setting
    ``beta1 = beta2`` recovers :func:`build_feature_chain_mnl`.
    """
    X = _check(features, beta0, beta1, beta2)
    lam = softmax(X @ np.asarray(beta0, dtype=np.float64))
    diff = X[None, :, :] - X[1:, None, :]  # diff[i-1, j] = x_j - x_i
    logits = np.maximum(diff, 0.0) @ np.asarray(beta1, dtype=np.float64)
    logits += np.minimum(diff, 0.0) @ np.asarray(beta2, dtype=np.float64)
    return MarkovChainModel(lam=lam, rho=_transition_rows(logits), alpha=alpha)
