"""Generalized Markov chain choice model and exact choice probabilities.

States are indexed ``0..n`` with ``0`` the no-purchase state. Arrays that
range over products only (stopping probabilities, the transient block) are
indexed ``0..n-1`` for products ``1..n``.

A customer arrives at state ``i`` with probability ``lam[i]``. At an offered
product ``i`` they buy with probability ``mu(i, S)`` and otherwise move along
row ``i`` of ``rho``; at a product that is not offered they always move. State
``0`` stops the walk without a purchase. Choice probabilities follow from the
absorption probabilities of this chain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
from numpy.typing import NDArray
from scipy import linalg

from gmchoice.errors import SingularSystemError, SpectralRadiusViolation

Assortment = tuple[int, ...]
StoppingFunction = Callable[[float, NDArray[np.float64]], NDArray[np.float64]]

STOCHASTIC_TOL = 1e-12
RESIDUAL_TOL = 1e-9
POWER_ITERATIONS = 200
POWER_TOL = 1e-10


def exponential_stopping(alpha: float, mass: NDArray[np.float64]) -> NDArray[np.float64]:
    """Default stopping rule ``exp(-alpha * mass)``.

    ``mass`` is the transition mass from a product into the offered states
    plus the no-purchase state. Large ``alpha * mass`` underflows to 0, which
    simply means the product is essentially never bought.
    """
    return np.exp(-alpha * mass)


def reciprocal_stopping(alpha: float, mass: NDArray[np.float64]) -> NDArray[np.float64]:
    """Alternative stopping rule ``1 / mass``; ignores ``alpha``.

    Values exceed 1 whenever ``mass < 1``, so the walk interpretation is lost,
    but the absorption algebra still goes through and yields an MNL-like
    closed form in the rank-1 case.
    """
    with np.errstate(divide="raise"):
        return 1.0 / mass


def _readonly(a) -> NDArray[np.float64]:
    arr = np.array(a, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MarkovChainModel:
    """Parameters of the generalized Markov chain choice model.

    Attributes:
        lam: Arrival distribution over states ``0..n``.
        rho: ``n x (n+1)`` row-stochastic transition matrix; ``rho[i-1, j]``
            is the probability of moving from product ``i`` to state ``j``.
        alpha: Comparison scale, ``alpha >= 0``. ``alpha = 0`` makes every
            offered product absorbing.
        stopping: Maps ``(alpha, mass)`` to stopping probabilities.
    """

    lam: NDArray[np.float64]
    rho: NDArray[np.float64]
    alpha: float
    stopping: StoppingFunction = field(default=exponential_stopping, compare=False)

    def __post_init__(self):
        lam = _readonly(self.lam)
        rho = _readonly(self.rho)
        if lam.ndim != 1 or lam.size < 2:
            raise ValueError("lam must be a vector over states 0..n with n >= 1")
        n = lam.size - 1
        if rho.shape != (n, n + 1):
            raise ValueError(f"rho must have shape ({n}, {n + 1}), got {rho.shape}")
        if np.any(lam < 0) or abs(lam.sum() - 1.0) > STOCHASTIC_TOL:
            raise ValueError("lam must be nonnegative and sum to 1")
        if np.any(rho < 0) or np.any(np.abs(rho.sum(axis=1) - 1.0) > STOCHASTIC_TOL):
            raise ValueError("every row of rho must be nonnegative and sum to 1")
        if not np.isfinite(self.alpha) or self.alpha < 0:
            raise ValueError("alpha must be a finite nonnegative number")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def n(self) -> int:
        return self.rho.shape[0]


def as_assortment(S: Iterable[int], n: int) -> Assortment:
    """Validate product indices and return them as a sorted tuple."""
    members = [int(i) for i in S]
    if len(set(members)) != len(members):
        raise ValueError(f"assortment has repeated products: {members}")
    for i in members:
        if not 1 <= i <= n:
            raise ValueError(f"product index {i} outside 1..{n}")
    return tuple(sorted(members))


def assortment_mask(S: Iterable[int], n: int) -> NDArray[np.bool_]:
    """Boolean membership vector of length ``n`` (entry ``i-1`` for product ``i``)."""
    mask = np.zeros(n, dtype=bool)
    idx = np.asarray(as_assortment(S, n), dtype=int)
    mask[idx - 1] = True
    return mask


def _check_product(i: int, n: int) -> None:
    if not 1 <= i <= n:
        raise IndexError(f"product index {i} outside 1..{n}")


def stopping_vector(model: MarkovChainModel, S: Iterable[int]) -> NDArray[np.float64]:
    """Stopping probabilities for all products, zero off the assortment."""
    mask = assortment_mask(S, model.n)
    # state 0 always belongs to S_+
    mass = model.rho[:, 0] + model.rho[:, 1:] @ mask
    mu = np.zeros(model.n)
    mu[mask] = model.stopping(model.alpha, mass[mask])
    return mu


def stopping_probability(model: MarkovChainModel, i: int, S: Iterable[int]) -> float:
    """Probability that a customer standing at product ``i`` buys it."""
    _check_product(i, model.n)
    return float(stopping_vector(model, S)[i - 1])


def modified_transition(model: MarkovChainModel, i: int, j: int, S: Iterable[int]) -> float:
    """Transition probability ``(1 - mu(i, S)) * rho[i, j]`` once ``S`` is offered."""
    _check_product(i, model.n)
    if not 0 <= j <= model.n:
        raise IndexError(f"state index {j} outside 0..{model.n}")
    mu = stopping_vector(model, S)[i - 1]
    return float((1.0 - mu) * model.rho[i - 1, j])


def spectral_radius(Q: NDArray[np.float64], iters: int = POWER_ITERATIONS, tol: float = POWER_TOL) -> float:
    """Power-iteration estimate of the spectral radius of ``|Q|``.

    For a nonnegative matrix this is the Perron root; for a signed matrix it
    is an upper bound on the spectral radius of ``Q``.
    """
    A = np.abs(Q)
    x = np.ones(A.shape[0])
    r = prev = np.inf
    for _ in range(iters):
        y = A @ x
        r = float(y.max())
        if r == 0.0:
            return 0.0
        x = y / r
        if abs(r - prev) < tol:
            break
        prev = r
    return r


def check_transient(Q: NDArray[np.float64]) -> None:
    """Raise unless the transient block has spectral radius strictly below 1.

    Starting the power iteration from the all-ones vector, the running
    product of the normalisers equals ``||A^k||_inf``. Once that drops below
    1 the radius is certified below 1. For substochastic matrices this
    happens within ``n`` steps whenever the radius is below 1.

    A block with negative entries (possible only under a stopping rule that
    exceeds 1) is checked through its eigenvalues instead, since ``|Q|`` can
    have a larger radius than ``Q``.
    """
    if np.any(Q < 0):
        r = float(np.max(np.abs(np.linalg.eigvals(Q)))) if Q.size else 0.0
        if r < 1.0 - STOCHASTIC_TOL:
            return
        raise SpectralRadiusViolation(f"spectral radius of the transient block is {r:.12g}")
    A = np.abs(Q)
    iters = max(POWER_ITERATIONS, A.shape[0] + 1)
    x = np.ones(A.shape[0])
    growth = 1.0
    r = 1.0
    for _ in range(iters):
        y = A @ x
        r = float(y.max())
        if r == 0.0:
            return
        growth *= r
        if growth < 1.0 - STOCHASTIC_TOL:
            return
        x = y / r
    raise SpectralRadiusViolation(
        f"spectral radius of the transient block is not below 1 (estimate {r:.12g})"
    )


def transient_matrix(model: MarkovChainModel, mu: NDArray[np.float64]) -> NDArray[np.float64]:
    """Product-to-product block ``Diag(1 - mu) rho(N, N)``."""
    return (1.0 - mu)[:, None] * model.rho[:, 1:]


def absorption_matrix(model: MarkovChainModel, mu: NDArray[np.float64]) -> NDArray[np.float64]:
    """``n x (n+1)`` one-step absorption block; column 0 is the no-purchase exit."""
    Pi = np.zeros((model.n, model.n + 1))
    Pi[:, 0] = (1.0 - mu) * model.rho[:, 0]
    Pi[:, 1:] = np.diag(mu)
    return Pi


def solve_checked(A: NDArray[np.float64], b: NDArray[np.float64], tol: float = RESIDUAL_TOL) -> NDArray[np.float64]:
    """Dense LU solve with an infinity-norm residual check."""
    try:
        lu = linalg.lu_factor(A, check_finite=True)
        x = linalg.lu_solve(lu, b)
    except (linalg.LinAlgError, ValueError) as exc:
        raise SingularSystemError(str(exc)) from exc
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("linear solve produced non-finite values")
    residual = np.max(np.abs(A @ x - b)) if x.size else 0.0
    if residual > tol:
        raise SingularSystemError(f"residual {residual:.3g} exceeds {tol:.1g}")
    return x


def choice_probabilities(model: MarkovChainModel, S: Iterable[int]) -> NDArray[np.float64]:
    """Exact choice probabilities ``pi[0..n]`` when ``S`` is offered.

    ``pi[0]`` is the no-purchase probability and ``pi[i] = 0`` for products
    outside ``S``.

    Raises:
        SpectralRadiusViolation: the walk is not absorbed almost surely.
        SingularSystemError: the absorption system could not be solved.
    """
    S = as_assortment(S, model.n)
    mu = stopping_vector(model, S)
    Q = transient_matrix(model, mu)
    check_transient(Q)
    B = solve_checked(np.eye(model.n) - Q, absorption_matrix(model, mu))
    pi = model.lam[1:] @ B
    pi[0] += model.lam[0]
    return pi


def _check_prices(prices, n: int) -> NDArray[np.float64]:
    p = np.asarray(prices, dtype=np.float64)
    if p.shape != (n,):
        raise ValueError(f"expected {n} prices, got shape {p.shape}")
    if np.any(~np.isfinite(p)) or np.any(p <= 0):
        raise ValueError("prices must be finite and strictly positive")
    return p


def expected_revenue(model: MarkovChainModel, S: Iterable[int], prices) -> float:
    """Expected revenue ``sum_{i in S} pi(i, S) p_i``."""
    p = _check_prices(prices, model.n)
    S = as_assortment(S, model.n)
    if not S:
        return 0.0
    pi = choice_probabilities(model, S)
    return float(pi[1:] @ p)
