"""Maximum-likelihood estimation for the feature-parameterised GMNL model.

Attractions are ``v_j = exp(beta . x_j)`` for states ``0..n``. For an
observation ``(S_t, j_t)`` write ``c_t = sum_{k in S_t} v_k``,
``s_t = v_0 + c_t`` and ``z_t = beta . x_0 + alpha s_t``; then

    log P(j_t | S_t) = [beta . x_{j_t}  or  z_t if j_t = 0]
                       - log(exp(z_t) + sum_{k in S_t} exp(beta . x_k)).

The log-likelihood is concave in ``alpha`` for fixed ``beta`` but not
jointly concave, so the two blocks are maximised alternately. All
objectives below are averaged over observations so that tolerances do not
scale with the sample size, and observations sharing an assortment are
pooled into choice counts before evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy import optimize
from scipy.special import expit, logsumexp
from scipy.stats import rankdata

from gmchoice.chain import Assortment, as_assortment
from gmchoice.gmnl import GmnlModel, gmnl_choice_probabilities

ALPHA_MAX = 50.0
BETA_GTOL = 1e-6
BETA_MAXITER = 500
RESTARTS = 3
RESTART_SCALE = 0.1


@dataclass(frozen=True)
class ChoiceDataset:
    """Observed assortments and choices.

    Attributes:
        masks: ``T x n`` membership matrix; row ``t`` is ``S_t``.
        choices: length-``T`` vector with entries in ``S_t`` or ``0``.
        features: optional ``(n+1) x d`` attribute matrix, row 0 for no purchase.
    """

    masks: NDArray[np.bool_]
    choices: NDArray[np.int64]
    features: NDArray[np.float64] | None = None

    def __post_init__(self):
        masks = np.array(self.masks, dtype=bool)
        choices = np.array(self.choices, dtype=np.int64)
        if masks.ndim != 2 or masks.shape[0] == 0:
            raise ValueError("masks must be a nonempty T x n matrix")
        T, n = masks.shape
        if choices.shape != (T,):
            raise ValueError(f"expected {T} choices, got shape {choices.shape}")
        if not masks.any(axis=1).all():
            raise ValueError("every assortment must be nonempty")
        if np.any(choices < 0) or np.any(choices > n):
            raise ValueError(f"choices must lie in 0..{n}")
        bought = choices > 0
        if not masks[np.flatnonzero(bought), choices[bought] - 1].all():
            bad = int(np.flatnonzero(bought & ~masks[np.arange(T), np.maximum(choices, 1) - 1])[0])
            raise ValueError(f"observation {bad}: choice {choices[bad]} not offered")
        masks.setflags(write=False)
        choices.setflags(write=False)
        object.__setattr__(self, "masks", masks)
        object.__setattr__(self, "choices", choices)
        if self.features is not None:
            X = np.array(self.features, dtype=np.float64)
            if X.ndim != 2 or X.shape[0] != n + 1:
                raise ValueError(f"features must have {n + 1} rows (state 0 first)")
            X.setflags(write=False)
            object.__setattr__(self, "features", X)

    @property
    def T(self) -> int:
        return self.masks.shape[0]

    @property
    def n(self) -> int:
        return self.masks.shape[1]

    @property
    def d(self) -> int:
        return self._X.shape[1]

    @property
    def no_purchase(self) -> NDArray[np.bool_]:
        return self.choices == 0

    @property
    def _X(self) -> NDArray[np.float64]:
        if self.features is None:
            raise ValueError("this dataset carries no features")
        return self.features

    def with_features(self, features) -> "ChoiceDataset":
        return ChoiceDataset(self.masks, self.choices, features)

    def observations(self) -> Iterable[tuple[Assortment, int]]:
        for row, j in zip(self.masks, self.choices):
            yield tuple(int(i) + 1 for i in np.flatnonzero(row)), int(j)

    @classmethod
    def from_observations(
        cls,
        observations: Iterable[tuple[Iterable[int], int | Sequence[int]]],
        n: int,
        features=None,
        drop_multi_click: bool = False,
    ) -> "ChoiceDataset":
        """Build from ``(S_t, j_t)`` pairs.

        ``j_t`` may be a sequence of clicked ids. Records with other than
        exactly one choice are rejected, or silently dropped when
        ``drop_multi_click`` is set.
        """
        masks, choices = [], []
        for t, (S, j) in enumerate(observations):
            if not isinstance(j, (int, np.integer)):
                j = list(j)
                if len(j) != 1:
                    if drop_multi_click:
                        continue
                    raise ValueError(f"observation {t}: expected one choice, got {j}")
                j = j[0]
            S = as_assortment(S, n)
            mask = np.zeros(n, dtype=bool)
            mask[np.asarray(S, dtype=int) - 1] = True
            masks.append(mask)
            choices.append(int(j))
        if not masks:
            raise ValueError("no observations")
        return cls(np.array(masks), np.array(choices), features)


@dataclass(frozen=True)
class GmnlParams:
    beta: NDArray[np.float64]
    alpha: float

    def __post_init__(self):
        beta = np.array(self.beta, dtype=np.float64)
        if beta.ndim != 1 or not np.all(np.isfinite(beta)):
            raise ValueError("beta must be a finite vector")
        if not np.isfinite(self.alpha) or self.alpha < 0:
            raise ValueError("alpha must be finite and nonnegative")
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "alpha", float(self.alpha))

    def attractions(self, features) -> NDArray[np.float64]:
        with np.errstate(over="raise"):
            v = np.exp(np.asarray(features, dtype=np.float64) @ self.beta)
        if not np.all(np.isfinite(v)):
            raise FloatingPointError("attractions are not finite")
        return v

    def to_model(self, features) -> GmnlModel:
        return GmnlModel.from_attractions(self.attractions(features), self.alpha)


@dataclass(frozen=True)
class GmnlFit:
    """Result of :func:`estimate_gmnl`; ``history`` holds ``(loglik, alpha)`` per outer iteration, starting at the MNL point."""

    params: GmnlParams
    loglik: float
    iterations: int
    converged: bool
    history: tuple[tuple[float, float], ...] = field(default=())


@dataclass(frozen=True)
class _Grouped:
    # observations aggregated by distinct assortment
    masks: NDArray[np.bool_]  # G x n
    counts: NDArray[np.float64]  # G x (n+1), choice counts per group
    sizes: NDArray[np.float64]  # G, observations per group


def _group(data: ChoiceDataset) -> _Grouped:
    cached = data.__dict__.get("_grouped")
    if cached is None:
        uniq, inv = np.unique(data.masks, axis=0, return_inverse=True)
        counts = np.zeros((uniq.shape[0], data.n + 1))
        np.add.at(counts, (inv.ravel(), data.choices), 1.0)
        cached = _Grouped(uniq, counts, counts.sum(axis=1))
        data.__dict__["_grouped"] = cached
    return cached


def _logits(u: NDArray[np.float64], alpha: float, masks: NDArray[np.bool_]):
    v = np.exp(u)
    s = v[0] + masks @ v[1:]
    logits = np.empty((masks.shape[0], u.size))
    logits[:, 0] = u[0] + alpha * s
    logits[:, 1:] = np.where(masks, u[1:], -np.inf)
    return s, logits, logsumexp(logits, axis=1)


@dataclass(frozen=True)
class _Terms:
    u: NDArray[np.float64]  # beta . x_j, states 0..n
    logp: NDArray[np.float64]  # G x (n+1) log choice probabilities, -inf off the assortment
    g: _Grouped


def _terms(data: ChoiceDataset, beta, alpha: float) -> _Terms:
    g = _group(data)
    u = data._X @ np.asarray(beta, dtype=np.float64)
    _, logits, lse = _logits(u, alpha, g.masks)
    return _Terms(u=u, logp=logits - lse[:, None], g=g)


def _mean_loglik(data: ChoiceDataset, t: _Terms) -> float:
    return float(np.sum(t.g.counts * np.where(t.g.counts > 0, t.logp, 0.0)) / data.T)


def log_likelihood(data: ChoiceDataset, params: GmnlParams) -> float:
    """Total log-likelihood (sum over observations)."""
    return _mean_loglik(data, _terms(data, params.beta, params.alpha)) * data.T


def mnl_log_likelihood(data: ChoiceDataset, beta) -> float:
    """Plain MNL log-likelihood with attractions ``exp(beta . x_j)``, one observation at a time."""
    u = data._X @ np.asarray(beta, dtype=np.float64)
    logits = np.concatenate(
        (np.full((data.T, 1), u[0]), np.where(data.masks, u[1:], -np.inf)), axis=1
    )
    return float(np.sum(logits[np.arange(data.T), data.choices] - logsumexp(logits, axis=1)))


def _beta_gradient(data: ChoiceDataset, beta, alpha: float, t: _Terms) -> NDArray[np.float64]:
    X = data._X
    g = t.g
    v = np.exp(t.u)
    P = np.exp(t.logp)
    dz = X[0] + alpha * (v[0] * X[0] + (g.masks * v[1:]) @ X[1:])
    chosen = g.counts[:, :1] * dz + g.counts[:, 1:] @ X[1:]
    expected = g.sizes[:, None] * (P[:, :1] * dz + P[:, 1:] @ X[1:])
    return (chosen - expected).sum(axis=0) / data.T


def log_likelihood_grad(data: ChoiceDataset, params: GmnlParams) -> tuple[NDArray[np.float64], float]:
    """Gradient of the total log-likelihood in ``(beta, alpha)``."""
    t = _terms(data, params.beta, params.alpha)
    gb = _beta_gradient(data, params.beta, params.alpha, t)
    ga = alpha_derivatives(data, params.beta, params.alpha)[0]
    return gb * data.T, ga * data.T


def _alpha_pieces(data: ChoiceDataset, beta):
    g = _group(data)
    u = data._X @ np.asarray(beta, dtype=np.float64)
    v = np.exp(u)
    c = g.masks @ v[1:]
    return g, v[0] + c, np.log(c), u[0]


def alpha_objective(data: ChoiceDataset, beta, alpha: float) -> float:
    """Mean of ``1{t in D0} alpha s_t - log(v_0 exp(alpha s_t) + c_t)`` over observations."""
    g, s, logc, u0 = _alpha_pieces(data, beta)
    terms = g.counts[:, 0] * alpha * s - g.sizes * np.logaddexp(u0 + alpha * s, logc)
    return float(terms.sum() / data.T)


def alpha_derivatives(data: ChoiceDataset, beta, alpha: float) -> tuple[float, float]:
    """First and second derivative of :func:`alpha_objective`."""
    g, s, logc, u0 = _alpha_pieces(data, beta)
    P0 = expit(u0 + alpha * s - logc)
    d1 = np.sum((g.counts[:, 0] - g.sizes * P0) * s) / data.T
    d2 = -np.sum(g.sizes * s * s * P0 * (1.0 - P0)) / data.T
    return float(d1), float(d2)


def solve_partial_alpha(data: ChoiceDataset, beta, alpha_max: float = ALPHA_MAX) -> float:
    """Maximise the concave one-dimensional objective in ``alpha`` over ``[0, alpha_max]``.

    The derivative is monotone, so its root is bracketed and found by Brent's
    method, followed by one Newton step kept only if it lowers ``|g'|``.
    """

    def g1(a: float) -> float:
        return alpha_derivatives(data, beta, a)[0]

    if g1(0.0) <= 0.0:
        return 0.0
    if g1(alpha_max) >= 0.0:
        return float(alpha_max)
    a = optimize.brentq(g1, 0.0, alpha_max, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    d1, d2 = alpha_derivatives(data, beta, a)
    if d2 < 0:
        b = a - d1 / d2
        if 0.0 <= b <= alpha_max and abs(g1(b)) < abs(d1):
            a = b
    return float(a)


def solve_partial_beta(
    data: ChoiceDataset,
    alpha: float,
    beta_init,
    restarts: int = RESTARTS,
    seed: int = 0,
) -> NDArray[np.float64]:
    """Maximise the log-likelihood over ``beta`` for fixed ``alpha``.

    BFGS with the analytic gradient, plus ``restarts`` runs from Gaussian
    perturbations of the first solution. Never returns a point worse than
    ``beta_init``.
    """

    def fun(b):
        t = _terms(data, b, alpha)
        return -_mean_loglik(data, t), -_beta_gradient(data, b, alpha, t)

    beta_init = np.asarray(beta_init, dtype=np.float64)
    best_b, best_f = beta_init, fun(beta_init)[0]

    def run(start):
        nonlocal best_b, best_f
        res = optimize.minimize(
            fun, start, jac=True, method="BFGS", options={"gtol": BETA_GTOL, "maxiter": BETA_MAXITER}
        )
        if np.all(np.isfinite(res.x)) and res.fun < best_f:
            best_b, best_f = res.x, res.fun

    run(beta_init)
    rng = np.random.default_rng(seed)
    anchor = best_b.copy()
    for _ in range(restarts):
        run(anchor + RESTART_SCALE * rng.standard_normal(anchor.size))
    return np.array(best_b)


def estimate_mnl(data: ChoiceDataset) -> NDArray[np.float64]:
    """MNL maximum-likelihood ``beta`` (concave, so no restarts)."""
    return solve_partial_beta(data, 0.0, np.zeros(data.d), restarts=0)


def estimate_gmnl(
    data: ChoiceDataset,
    max_iters: int = 100,
    tol: float = 1e-8,
    alpha_max: float = ALPHA_MAX,
    beta_init=None,
) -> GmnlFit:
    """Alternating maximisation starting from the MNL estimate and ``alpha = 0``.

    Stops when the relative log-likelihood gain of an outer iteration drops
    below ``tol``.
    """
    beta = estimate_mnl(data) if beta_init is None else np.asarray(beta_init, dtype=np.float64)
    alpha = 0.0
    ll = log_likelihood(data, GmnlParams(beta, alpha))
    history = [(ll, alpha)]
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        alpha = solve_partial_alpha(data, beta, alpha_max)
        beta = solve_partial_beta(data, alpha, beta, seed=it)
        new = log_likelihood(data, GmnlParams(beta, alpha))
        history.append((new, alpha))
        gain = new - ll
        ll = new
        if gain <= tol * abs(ll):
            converged = True
            break
    return GmnlFit(GmnlParams(beta, alpha), ll, it, converged, tuple(history))


def predict_choice_probs(params: GmnlParams, features, S: Iterable[int]) -> NDArray[np.float64]:
    """Choice probabilities ``pi[0..n]`` under attractions ``exp(beta . x_j)``."""
    return gmnl_choice_probabilities(params.to_model(features), S)


def predict_dataset_probs(params: GmnlParams, data: ChoiceDataset) -> NDArray[np.float64]:
    """``T x (n+1)`` matrix of choice probabilities for every observed assortment."""
    u = data._X @ params.beta
    with np.errstate(over="ignore", invalid="ignore"):
        _, logits, lse = _logits(u, params.alpha, data.masks)
        P = np.exp(logits - lse[:, None])
    if not np.all(np.isfinite(P)):
        raise FloatingPointError("choice probabilities overflowed; parameters are out of range")
    return P


def choice_scores(params: GmnlParams, data: ChoiceDataset) -> tuple[NDArray[np.float64], NDArray[np.int64]]:
    """Score every offered product of every observation; label 1 if it was chosen."""
    P = predict_dataset_probs(params, data)[:, 1:]
    rows, cols = np.nonzero(data.masks)
    return P[rows, cols], (data.choices[rows] == cols + 1).astype(np.int64)


def roc_auc(scores, labels) -> float:
    """Area under the ROC curve via the rank-sum statistic; tied scores count half."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be vectors of equal length")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be binary")
    pos = labels == 1
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("need at least one positive and one negative label")
    ranks = rankdata(scores)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))
