"""Rank-1 special case: the generalized multinomial logit (GMNL) model.

Every product transitions according to the same attraction vector ``v``
(which is also the arrival distribution), so choice probabilities have the
closed form

    pi(i, S) = v_i / (sum_{k in S} v_k + v_0 * exp(alpha * sum_{j in S+} v_j)).

The no-purchase attraction grows with the assortment, which is what lets the
model express choice overload.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from numpy.typing import NDArray

from gmchoice.chain import (
    STOCHASTIC_TOL,
    MarkovChainModel,
    StoppingFunction,
    _check_prices,
    _readonly,
    as_assortment,
    assortment_mask,
    exponential_stopping,
)


@dataclass(frozen=True)
class GmnlModel:
    """Attractions ``v[0..n]`` (strictly positive, summing to 1) and scale ``alpha``."""

    v: NDArray[np.float64]
    alpha: float

    def __post_init__(self):
        v = _readonly(self.v)
        if v.ndim != 1 or v.size < 2:
            raise ValueError("v must be a vector over states 0..n with n >= 1")
        if np.any(~np.isfinite(v)) or np.any(v <= 0):
            raise ValueError("attractions must be strictly positive")
        if abs(v.sum() - 1.0) > STOCHASTIC_TOL:
            raise ValueError(f"attractions must sum to 1 (sum={v.sum():.17g})")
        if not np.isfinite(self.alpha) or self.alpha < 0:
            raise ValueError("alpha must be a finite nonnegative number")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def n(self) -> int:
        return self.v.size - 1

    @classmethod
    def from_attractions(cls, w, alpha: float) -> "GmnlModel":
        """Normalise unscaled attractions ``w``.

        Scaling ``w`` by ``c`` is equivalent to scaling ``alpha`` by ``1/c``,
        so the returned model has scale ``alpha * sum(w)``.
        """
        w = np.asarray(w, dtype=np.float64)
        total = w.sum()
        return cls(v=w / total, alpha=alpha * total)

    def to_chain(self, stopping: StoppingFunction = exponential_stopping) -> MarkovChainModel:
        """Equivalent rank-1 Markov chain with ``lam = v`` and every row of ``rho`` equal to ``v``."""
        rho = np.tile(self.v, (self.n, 1))
        return MarkovChainModel(lam=self.v, rho=rho, alpha=self.alpha, stopping=stopping)


def homogeneous_model(n: int, alpha: float) -> GmnlModel:
    """All ``n+1`` states equally attractive."""
    return GmnlModel(v=np.full(n + 1, 1.0 / (n + 1)), alpha=alpha)


def no_purchase_attraction(model: GmnlModel, S: Iterable[int]) -> float:
    """``v_0 * exp(alpha * sum_{j in S+} v_j)``."""
    mask = assortment_mask(S, model.n)
    return float(model.v[0] * np.exp(model.alpha * (model.v[0] + model.v[1:] @ mask)))


def gmnl_choice_probabilities(model: GmnlModel, S: Iterable[int]) -> NDArray[np.float64]:
    """Closed-form choice probabilities ``pi[0..n]``."""
    mask = assortment_mask(S, model.n)
    offered = model.v[1:] * mask
    outside = model.v[0] * np.exp(model.alpha * (model.v[0] + offered.sum()))
    denom = offered.sum() + outside
    return np.concatenate(([outside], offered)) / denom


def gmnl_choice_probability(model: GmnlModel, i: int, S: Iterable[int]) -> float:
    """Probability of choosing state ``i`` (``0`` = no purchase) from ``S``."""
    if not 0 <= i <= model.n:
        raise IndexError(f"state index {i} outside 0..{model.n}")
    return float(gmnl_choice_probabilities(model, S)[i])


def gmnl_revenue(model: GmnlModel, S: Iterable[int], prices) -> float:
    p = _check_prices(prices, model.n)
    mask = assortment_mask(S, model.n)
    if not mask.any():
        return 0.0
    vs = model.v[1:] * mask
    denom = vs.sum() + model.v[0] * np.exp(model.alpha * (model.v[0] + vs.sum()))
    return float(vs @ p / denom)


def gmnl_revenue_all(model: GmnlModel, prices, masks: NDArray[np.bool_]) -> NDArray[np.float64]:
    """Revenue for each row of a boolean ``m x n`` membership matrix."""
    p = _check_prices(prices, model.n)
    vs = masks @ model.v[1:]
    vp = masks @ (model.v[1:] * p)
    return vp / (vs + model.v[0] * np.exp(model.alpha * (model.v[0] + vs)))


def homogeneous_revenue(n: int, alpha: float, k: int, price: float = 1.0) -> float:
    """Revenue of any ``k``-subset in the homogeneous model: ``k p / (k + exp(alpha (k+1)/(n+1)))``."""
    return k * price / (k + np.exp(alpha * (k + 1) / (n + 1)))


def best_cardinality(n: int, alpha: float, price: float = 1.0) -> int:
    """Revenue-maximising assortment size in the homogeneous model; ties go to the smaller size."""
    revenues = [homogeneous_revenue(n, alpha, k, price) for k in range(1, n + 1)]
    return int(np.argmax(revenues)) + 1


def alt_stopping_choice_probability(model: GmnlModel, i: int, S: Iterable[int]) -> float:
    """Choice probability under the reciprocal stopping rule ``mu = 1 / sum_{j in S+} v_j``.

    Evaluates ``v_i / ((1 + v_0) sum_{j in S} v_j + v_0^2)`` for ``i`` in ``S``
    and returns 0 otherwise. Ratios between offered products equal ``v_i/v_j``
    as under MNL.
    """
    S = as_assortment(S, model.n)
    if not 1 <= i <= model.n:
        raise IndexError(f"product index {i} outside 1..{model.n}")
    if i not in S:
        return 0.0
    v0 = model.v[0]
    total = model.v[np.asarray(S)].sum()
    return float(model.v[i] / ((1.0 + v0) * total + v0 * v0))


def random_gmnl_model(n: int, rng: np.random.Generator, alpha: float | None = None, alpha_max: float = 10.0) -> GmnlModel:
    """Dirichlet attractions over ``0..n``; ``alpha`` uniform on ``[0, alpha_max]`` unless given."""
    if alpha is None:
        alpha = rng.uniform(0.0, alpha_max)
    v = rng.dirichlet(np.ones(n + 1))
    # keep attractions strictly positive after floating-point underflow
    v = np.maximum(v, 1e-12)
    return GmnlModel(v=v / v.sum(), alpha=alpha)
