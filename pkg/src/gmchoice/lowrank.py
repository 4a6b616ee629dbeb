"""Rank-K generalized Markov chain: ``rho(N, N+) = U V^T``.

``U`` is ``n x K`` (rows for products ``1..n``) and ``V`` is ``(n+1) x K``
(rows for states ``0..n``). Revenue reduces to a ``K x K`` linear system
instead of an ``n x n`` one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from numpy.typing import NDArray

from gmchoice.chain import (
    STOCHASTIC_TOL,
    MarkovChainModel,
    _check_prices,
    _readonly,
    assortment_mask,
    solve_checked,
)
from gmchoice.errors import PreconditionError, SingularSystemError


@dataclass(frozen=True)
class LowRankModel:
    """Factorised transition matrix plus arrivals and comparison scale.

    Construction enforces the assumptions that keep ``I - UV(S)`` well
    conditioned: ``u_jk v_jk <= 1/n`` for every product ``j`` and factor
    ``k``, ``alpha <= log n``, and ``v_jk > 0`` for products.
    """

    U: NDArray[np.float64]
    V: NDArray[np.float64]
    lam: NDArray[np.float64]
    alpha: float

    def __post_init__(self):
        U, V, lam = _readonly(self.U), _readonly(self.V), _readonly(self.lam)
        if U.ndim != 2 or V.ndim != 2:
            raise ValueError("U and V must be matrices")
        n, K = U.shape
        if V.shape != (n + 1, K):
            raise ValueError(f"V must have shape ({n + 1}, {K}), got {V.shape}")
        if not 1 <= K < n:
            raise ValueError(f"rank K={K} must satisfy 1 <= K < n={n}")
        if lam.shape != (n + 1,) or np.any(lam < 0) or abs(lam.sum() - 1.0) > STOCHASTIC_TOL:
            raise ValueError("lam must be a probability vector over states 0..n")
        if np.any(U < 0) or np.any(V < 0):
            raise ValueError("U and V must be nonnegative")
        if np.any(V[1:] <= 0):
            raise ValueError("product rows of V must be strictly positive")
        rows = U @ V.sum(axis=0)
        if np.any(np.abs(rows - 1.0) > STOCHASTIC_TOL):
            raise ValueError("U V^T must be row-stochastic")
        if np.any(U * V[1:] > 1.0 / n + STOCHASTIC_TOL):
            raise ValueError("need u_jk * v_jk <= 1/n for all products j and factors k")
        if not np.isfinite(self.alpha) or not 0 <= self.alpha <= np.log(n):
            raise ValueError(f"alpha must lie in [0, log n] = [0, {np.log(n):.6g}]")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def n(self) -> int:
        return self.U.shape[0]

    @property
    def K(self) -> int:
        return self.U.shape[1]

    def to_chain(self) -> MarkovChainModel:
        """Expanded ``n``-product chain with ``rho = U V^T``."""
        return MarkovChainModel(lam=self.lam, rho=self.U @ self.V.T, alpha=self.alpha)


def random_lowrank_model(
    n: int,
    K: int,
    rng: np.random.Generator,
    alpha: float | None = None,
    low: float = 0.1,
) -> LowRankModel:
    """Draw a model satisfying every :class:`LowRankModel` assumption.

    Product entries of each column of ``V`` are ``a / n`` with ``a`` uniform
    on ``[low, 1)``; the state-0 entry takes the remaining mass so columns
    sum to one. Rows of ``U`` are uniform simplex points, which makes
    ``U V^T`` row-stochastic and keeps ``u_jk v_jk <= 1/n``.
    """
    if alpha is None:
        alpha = rng.uniform(0.0, np.log(n))
    V = np.empty((n + 1, K))
    V[1:] = rng.uniform(low, 1.0, size=(n, K)) / n
    V[0] = 1.0 - V[1:].sum(axis=0)
    U = rng.dirichlet(np.ones(K), size=n)
    lam = rng.dirichlet(np.ones(n + 1))
    return LowRankModel(U=U, V=V, lam=lam, alpha=alpha)


def lowrank_mu_vector(model: LowRankModel, S: Iterable[int]) -> NDArray[np.float64]:
    """``exp(-alpha * sum_k u_ik V_k(S))`` on ``S``, zero elsewhere."""
    mask = assortment_mask(S, model.n)
    Vk = model.V[0] + mask @ model.V[1:]
    mu = np.exp(-model.alpha * (model.U @ Vk))
    return np.where(mask, mu, 0.0)


def lowrank_mu(model: LowRankModel, i: int, S: Iterable[int]) -> float:
    if not 1 <= i <= model.n:
        raise IndexError(f"product index {i} outside 1..{model.n}")
    return float(lowrank_mu_vector(model, S)[i - 1])


def uv_matrix(model: LowRankModel, S: Iterable[int]) -> NDArray[np.float64]:
    """``M[k, m] = sum_j (1 - mu_j) u_jk v_jm`` over products ``j``."""
    mu = lowrank_mu_vector(model, S)
    return model.U.T @ ((1.0 - mu)[:, None] * model.V[1:])


def lowrank_revenue(model: LowRankModel, S: Iterable[int], prices) -> float:
    """Expected revenue through the ``K x K`` reduction.

    The inverse of ``I - Diag(1-mu) U V^T`` has entries
    ``delta_ij + (1 - mu_i) u_i^T (I - M^T)^{-1} v_j`` with ``M`` from
    :func:`uv_matrix`, so

        R(S) = sum_i lam_i mu_i p_i
               + sum_i lam_i (1 - mu_i) u_i^T (I - M^T)^{-1} sum_{j in S} p_j mu_j v_j.
    """
    p = _check_prices(prices, model.n)
    mu = lowrank_mu_vector(model, S)
    if not mu.any():
        return 0.0
    M = uv_matrix(model, S)
    w = model.V[1:].T @ (p * mu)
    y = solve_checked(np.eye(model.K) - M.T, w)
    lam = model.lam[1:]
    f = model.U @ y
    return float(lam @ (mu * p) + (lam * (1.0 - mu)) @ f)


def perturbation_bound_check(
    model: LowRankModel,
    S: Iterable[int],
    j: int,
    H,
    vhat,
    eps: float,
    c: float = 4.0,
) -> bool:
    """Check the resolvent sandwich for a perturbed ``(H, vhat)``.

    Given ``(1-eps) H <= UV(S) <= (1+eps) H`` and
    ``(1-eps) vhat <= v_j <= (1+eps) vhat`` entrywise, test whether
    ``(1 - c eps) x_hat <= x <= (1 + c eps) x_hat`` where
    ``x = [I - UV(S)]^{-1} v_j`` and ``x_hat = [I - H]^{-1} vhat``.

    Raises:
        PreconditionError: the hypotheses do not hold.
    """
    if not 1 <= j <= model.n:
        raise IndexError(f"product index {j} outside 1..{model.n}")
    if not 0 <= eps < 1:
        raise PreconditionError("eps must lie in [0, 1)")
    H = np.asarray(H, dtype=np.float64)
    vhat = np.asarray(vhat, dtype=np.float64)
    M = uv_matrix(model, S)
    vj = model.V[j]
    slack = 1e-12
    if H.shape != M.shape or vhat.shape != vj.shape:
        raise PreconditionError("H must be K x K and vhat a K-vector")
    if np.any(M < (1 - eps) * H - slack) or np.any(M > (1 + eps) * H + slack):
        raise PreconditionError("UV(S) is not within (1 +- eps) H entrywise")
    if np.any(vj < (1 - eps) * vhat - slack) or np.any(vj > (1 + eps) * vhat + slack):
        raise PreconditionError("v_j is not within (1 +- eps) vhat entrywise")
    if np.max(np.abs(np.linalg.eigvals(H))) >= 1.0:
        raise PreconditionError("spectral radius of H must be below 1")
    I = np.eye(model.K)
    try:
        x = solve_checked(I - M, vj)
        xhat = solve_checked(I - H, vhat)
    except SingularSystemError as exc:
        raise PreconditionError(str(exc)) from exc
    lo = (1 - c * eps) * xhat - slack
    hi = (1 + c * eps) * xhat + slack
    return bool(np.all(x >= lo) and np.all(x <= hi))
