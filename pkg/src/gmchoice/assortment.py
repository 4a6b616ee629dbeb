"""Assortment optimisation: exhaustive search and the two knapsack-style FPTAS.

Both approximation schemes guess the value of one (rank 1) or ``K`` (rank
``K``) linear functions of the optimal assortment on a geometric grid, solve
a knapsack DP on rounded weights for every guess, and return the candidate
with the best exact revenue.
"""

from __future__ import annotations

import enum
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from numpy.typing import NDArray

from gmchoice.chain import Assortment, _check_prices, as_assortment
from gmchoice.errors import SingularSystemError
from gmchoice.gmnl import GmnlModel, gmnl_revenue, gmnl_revenue_all
from gmchoice.lowrank import LowRankModel, lowrank_revenue

BRUTE_FORCE_MAX_N = 22
MAX_RANK = 3
TIE_TOL = 1e-12


class Method(str, enum.Enum):
    BRUTE_FORCE = "brute"
    FPTAS_RANK1 = "fptas-rank1"
    FPTAS_RANKK = "fptas-rankK"


@dataclass(frozen=True)
class FptasConfig:
    epsilon: float
    parallel_guesses: bool = False
    threads: int | None = None

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")


@dataclass(frozen=True)
class OptimizationResult:
    assortment: Assortment
    revenue: float
    method: Method
    guesses_evaluated: int = 0
    dp_states: int = 0


class ResourceGuardError(ValueError):
    """Exhaustive enumeration was requested beyond the size guard."""


def _beats(rev: float, S: Assortment, best_rev: float, best_S: Assortment | None) -> bool:
    # deterministic order: higher revenue, then lexicographically smaller set
    if best_S is None:
        return True
    scale = max(1.0, abs(best_rev))
    if rev > best_rev + TIE_TOL * scale:
        return True
    if rev >= best_rev - TIE_TOL * scale:
        return S < best_S
    return False


def pick_best(candidates: Iterable[tuple[float, Assortment]]) -> tuple[float, Assortment]:
    best_rev, best_S = -math.inf, None
    for rev, S in candidates:
        if _beats(rev, S, best_rev, best_S):
            best_rev, best_S = rev, S
    if best_S is None:
        raise ValueError("no candidates")
    return best_rev, best_S


def all_masks(n: int) -> NDArray[np.bool_]:
    """Every subset of ``n`` products as rows of a ``2^n x n`` boolean matrix."""
    codes = np.arange(2**n, dtype=np.int64)
    return ((codes[:, None] >> np.arange(n)) & 1).astype(bool)


def _mask_to_set(mask) -> Assortment:
    return tuple(int(i) + 1 for i in np.flatnonzero(mask))


def brute_force_optimal(revenue_fn: Callable[[Assortment], float], n: int) -> OptimizationResult:
    """Evaluate ``revenue_fn`` on all ``2^n`` subsets.

    Ties within a relative ``1e-12`` go to the lexicographically smallest
    sorted member tuple.
    """
    if n > BRUTE_FORCE_MAX_N:
        raise ResourceGuardError(f"brute force limited to n <= {BRUTE_FORCE_MAX_N}; use the FPTAS")
    subsets = (S for r in range(n + 1) for S in itertools.combinations(range(1, n + 1), r))
    rev, S = pick_best((float(revenue_fn(S)), S) for S in subsets)
    return OptimizationResult(assortment=S, revenue=rev, method=Method.BRUTE_FORCE)


def _product_classes(model: GmnlModel, p: NDArray[np.float64]) -> list[list[int]]:
    classes: dict[tuple[float, float], list[int]] = {}
    for j in range(1, model.n + 1):
        classes.setdefault((model.v[j], p[j - 1]), []).append(j)
    return list(classes.values())


def brute_force_gmnl(model: GmnlModel, prices) -> OptimizationResult:
    """Exact GMNL optimum by vectorised enumeration.

    Products with identical attraction and price are interchangeable, so
    subsets are enumerated by how many members of each such class they
    contain. Within a class the lowest indices are used, which keeps the
    lexicographic tie rule of :func:`brute_force_optimal`.
    """
    p = _check_prices(prices, model.n)
    classes = _product_classes(model, p)
    sizes = [len(c) for c in classes]
    total = math.prod(s + 1 for s in sizes)
    if total > 2**BRUTE_FORCE_MAX_N:
        raise ResourceGuardError(f"{total} distinct subsets exceed the enumeration guard")
    counts = np.array(list(itertools.product(*(range(s + 1) for s in sizes))), dtype=np.float64)
    cls_v = np.array([model.v[c[0]] for c in classes])
    cls_p = np.array([p[c[0] - 1] for c in classes])
    vs = counts @ cls_v
    vp = counts @ (cls_v * cls_p)
    rev = vp / (vs + model.v[0] * np.exp(model.alpha * (model.v[0] + vs)))
    best = rev.max()
    near = np.flatnonzero(rev >= best - TIE_TOL * max(1.0, abs(best)))

    def members(row) -> Assortment:
        picked = [j for c, k in zip(classes, row) for j in c[: int(k)]]
        return tuple(sorted(picked))

    r, S = pick_best((float(rev[i]), members(counts[i])) for i in near)
    return OptimizationResult(assortment=S, revenue=r, method=Method.BRUTE_FORCE)


def guess_grid(vmin: float, vmax: float, n: int, eps: float) -> NDArray[np.float64]:
    """Geometric grid ``vmin (1+eps)^l`` for ``l = 0..L`` reaching at least ``n vmax``."""
    if vmin <= 0:
        raise ValueError("grid needs a strictly positive lower end")
    L = max(0, math.ceil(math.log(n * vmax / vmin) / math.log1p(eps) - 1e-12))
    return vmin * (1.0 + eps) ** np.arange(L + 1)


def knapsack_max(values: NDArray[np.float64], weights: NDArray[np.int64], capacity: int) -> tuple[float, Assortment]:
    """0/1 knapsack: maximise total value subject to total weight ``<= capacity``.

    Items are products ``1..len(values)``. When including and excluding an
    item tie, it is excluded, so the returned set is minimal.
    """
    n = len(values)
    R = np.zeros(capacity + 1)
    take = np.zeros((n, capacity + 1), dtype=bool)
    for k in range(n):
        w = int(weights[k])
        if w > capacity:
            continue
        cand = R[: capacity + 1 - w] + values[k]
        better = cand > R[w:]
        take[k, w:] = better
        R[w:] = np.where(better, cand, R[w:])
    chosen = []
    i = capacity
    for k in range(n - 1, -1, -1):
        if take[k, i]:
            chosen.append(k + 1)
            i -= int(weights[k])
    return float(R[capacity]), tuple(sorted(chosen))


def _run_guesses(fn, guesses: Sequence, config: FptasConfig) -> list:
    if config.parallel_guesses and len(guesses) > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            return list(pool.map(fn, guesses))
    return [fn(h) for h in guesses]


def fptas_gmnl(model: GmnlModel, prices, config: FptasConfig) -> OptimizationResult:
    """Approximate GMNL assortment optimisation.

    For each guess ``h`` of ``sum_{j in S*} v_j`` the weights
    ``ceil(v_j / (eps h / n))`` feed a knapsack with capacity
    ``ceil(n/eps) + n`` maximising ``sum v_j p_j``.
    """
    p = _check_prices(prices, model.n)
    eps, n = config.epsilon, model.n
    vstar = model.v[1:]
    grid = guess_grid(vstar.min(), vstar.max(), n, eps)
    capacity = math.ceil(n / eps) + n
    values = vstar * p

    def solve(h: float) -> Assortment:
        weights = np.ceil(vstar / (eps * h / n)).astype(np.int64)
        return knapsack_max(values, weights, capacity)[1]

    candidates = set(_run_guesses(solve, list(grid), config))
    rev, S = pick_best((gmnl_revenue(model, S, p), S) for S in candidates)
    return OptimizationResult(
        assortment=S,
        revenue=rev,
        method=Method.FPTAS_RANK1,
        guesses_evaluated=len(grid),
        dp_states=len(grid) * (capacity + 1) * n,
    )


def _shift_slices(w: Sequence[int], size: int) -> tuple[tuple[slice, ...], tuple[slice, ...]]:
    dst = tuple(slice(int(x), size) for x in w)
    src = tuple(slice(0, size - int(x)) for x in w)
    return dst, src


def exact_weight_knapsack(
    values: NDArray[np.float64],
    weights: NDArray[np.int64],
    lower: int,
    upper: int,
) -> Assortment | None:
    """Multi-dimensional knapsack with per-coordinate window ``[lower, upper]``.

    ``weights`` is ``n x K``. Returns the subset maximising total value among
    those whose weight vector lies in the window, or ``None`` if none does.
    Infeasible states hold ``-inf``; ties exclude the item, and among
    optimal final weight vectors the first in C order is used.
    """
    n, K = weights.shape
    size = upper + 1
    best = np.full((size,) * K, -np.inf)
    best[(0,) * K] = 0.0
    takes = []
    for m in range(n):
        take = np.zeros_like(best, dtype=bool)
        w = weights[m]
        if np.all(w <= upper):
            dst, src = _shift_slices(w, size)
            cand = best[src] + values[m]
            better = cand > best[dst]
            take[dst] = better
            best[dst] = np.where(better, cand, best[dst])
        takes.append(take)
    window = best[(slice(lower, size),) * K]
    if not np.isfinite(window).any():
        return None
    flat = int(np.argmax(window))
    pos = np.array(np.unravel_index(flat, window.shape)) + lower
    chosen = []
    for m in range(n - 1, -1, -1):
        if takes[m][tuple(pos)]:
            chosen.append(m + 1)
            pos = pos - weights[m]
    return tuple(sorted(chosen))


def fptas_lowrank(model: LowRankModel, prices, config: FptasConfig) -> OptimizationResult:
    """Approximate assortment optimisation for the rank-``K`` model (``K <= 3``).

    A guess ``h`` estimates ``sum_{j in S} v_jk`` for every factor ``k``.
    From it the stopping probabilities ``mu_i(h)``, the ``K x K`` matrix
    ``H(h)`` and a separable per-product revenue are formed; the DP then
    searches subsets whose rounded weights ``ceil(v_jk / (eps h_k / n))``
    lie in ``[ceil(n/eps), ceil(n/eps) + n]`` in every coordinate.
    """
    p = _check_prices(prices, model.n)
    n, K, eps = model.n, model.K, config.epsilon
    if K > MAX_RANK:
        raise ValueError(f"rank {K} exceeds the supported maximum {MAX_RANK}")
    Vp = model.V[1:]
    grids = [guess_grid(Vp[:, k].min(), Vp[:, k].max(), n, eps) for k in range(K)]
    guesses = [np.array(h) for h in itertools.product(*grids)]
    lower = math.ceil(n / eps)
    upper = lower + n
    lam = model.lam[1:]
    I = np.eye(K)

    def solve(h: NDArray[np.float64]) -> Assortment | None:
        mu = np.exp(-model.alpha * (model.U @ (model.V[0] + h)))
        H = model.U.T @ ((1.0 - mu)[:, None] * Vp)
        g = model.U.T @ (lam * (1.0 - mu))
        try:
            z = np.linalg.solve(I - H, g)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(z)):
            return None
        values = p * mu * (lam + Vp @ z)
        weights = np.ceil(Vp / (eps * h / n)).astype(np.int64)
        return exact_weight_knapsack(values, weights, lower, upper)

    found = [S for S in _run_guesses(solve, guesses, config) if S is not None]
    candidates = set(found) | {()}
    scored = []
    for S in candidates:
        try:
            scored.append((lowrank_revenue(model, S, p), S))
        except SingularSystemError:
            continue
    rev, S = pick_best(scored)
    return OptimizationResult(
        assortment=S,
        revenue=rev,
        method=Method.FPTAS_RANKK,
        guesses_evaluated=len(guesses),
        dp_states=len(guesses) * (upper + 1) ** K * n,
    )


def nominal_dp_states(model: LowRankModel, eps: float) -> int:
    """State count of a dense ``(L+1)^K (U+1)^K n`` table over all guesses."""
    n, K = model.n, model.K
    Vp = model.V[1:]
    guesses = math.prod(len(guess_grid(Vp[:, k].min(), Vp[:, k].max(), n, eps)) for k in range(K))
    lower = math.ceil(n / eps)
    return guesses * (lower + 1) ** K * (lower + n + 1) ** K * n


def _check_partition_input(c) -> NDArray[np.int64]:
    c = np.asarray(c)
    if c.ndim != 1 or c.size == 0 or not np.issubdtype(c.dtype, np.integer) or np.any(c <= 0):
        raise ValueError("c must be a nonempty vector of positive integers")
    return c.astype(np.int64)


def build_partition_instance_small_alpha(
    c, alpha: float = 1.0, literal: bool = False
) -> tuple[GmnlModel, NDArray[np.float64], float]:
    """GMNL instance whose optimum reaches the returned target iff ``c`` has a perfect partition.

    Attractions are ``v_i = c_i/(2T+1)`` and ``v_0 = 1/(2T+1)`` with
    ``T = sum(c)/2``; every product costs ``A`` except product 1, which costs
    ``A + 1/c_1`` and therefore belongs to an optimal set when ``alpha <= 1``.
    Restricted to sets containing product 1 the revenue is
    ``F(x) = (A x + 1) / (x + B e^{b x})`` of ``x = sum_{i in S} c_i`` with
    ``B = (2T+1) v_0 e^{alpha v_0}`` and ``b = alpha/(2T+1)``.

    ``A`` is chosen so that ``F'(T) = 0``. The sign of ``F'`` is that of
    ``B e^{bx}(A - b(Ax + 1)) - 1``, which is strictly decreasing in ``x``, so
    ``F`` peaks exactly at ``T`` and the target is ``F(T)``.

    With ``literal=True`` the textbook price ``A = 1/B + (e^{bT} - 1)/T`` and
    its target are returned instead. That choice only makes ``F(0) = F(T)``,
    so ``F`` exceeds the target strictly inside ``(0, T)`` and the
    equivalence fails (e.g. ``c = (1, 1, 2)``).
    """
    c = _check_partition_input(c)
    if not 0 < alpha <= 1:
        raise ValueError("this construction needs 0 < alpha <= 1")
    T = c.sum() / 2.0
    v = np.concatenate(([1.0], c)) / (2 * T + 1)
    v0 = v[0]
    B = (2 * T + 1) * v0 * np.exp(alpha * v0)
    b = alpha / (2 * T + 1)
    growth = np.exp(b * T)
    if literal:
        base = 1.0 / B + (growth - 1.0) / T
        target = (T / B + growth) / (T + B * growth)
    else:
        base = (1.0 + B * b * growth) / (B * growth * (1.0 - b * T))
        target = (base * T + 1.0) / (T + B * growth)
    prices = np.full(c.size, base)
    prices[0] += 1.0 / c[0]
    return GmnlModel(v=v, alpha=alpha), prices, float(target)


def build_partition_instance_large_alpha(c, alpha: float = 3.0) -> tuple[GmnlModel, NDArray[np.float64], float]:
    """Partition reduction for ``alpha > 2`` with unit prices."""
    c = _check_partition_input(c)
    if not alpha > 2:
        raise ValueError("this construction needs alpha > 2")
    T = c.sum() / 2.0
    v = np.concatenate(([1.0 - 2.0 / alpha], c / (T * alpha)))
    c0 = v[0] * np.exp(alpha * v[0])
    target = 1.0 / (1.0 + alpha * c0 * math.e)
    return GmnlModel(v=v, alpha=alpha), np.ones(c.size), float(target)


def has_partition(c) -> bool:
    """Whether some subset of ``c`` sums to exactly half the total (reachable-sum enumeration)."""
    c = _check_partition_input(c)
    total = int(c.sum())
    if total % 2:
        return False
    reachable = {0}
    for x in c:
        reachable |= {s + int(x) for s in reachable}
    return total // 2 in reachable
