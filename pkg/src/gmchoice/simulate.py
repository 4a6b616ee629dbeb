"""Random-walk simulation of the choice process and derived experiments.

Walk batches are split into fixed-size blocks. Block ``b`` draws from the
``b``-th child of the root seed, so results do not depend on how many
threads process the blocks.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from numpy.typing import NDArray

from gmchoice.assortment import OptimizationResult, brute_force_optimal
from gmchoice.chain import MarkovChainModel, as_assortment, assortment_mask, expected_revenue
from gmchoice.errors import NonTerminationError
from gmchoice.estimation import ChoiceDataset
from gmchoice.gmnl import GmnlModel, gmnl_choice_probabilities, homogeneous_model

MAX_STEPS = 1_000_000
BLOCK = 1 << 16

Sampler = Callable[[np.random.Generator, int, int], NDArray[np.bool_]]


@dataclass(frozen=True)
class WalkOutcome:
    chosen: int
    steps: int


@dataclass(frozen=True)
class WalkBatch:
    chosen: NDArray[np.int64]
    steps: NDArray[np.int64]

    def frequencies(self, n: int) -> NDArray[np.float64]:
        return np.bincount(self.chosen, minlength=n + 1) / self.chosen.size


def _seed_sequence(seed) -> np.random.SeedSequence:
    return seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)


def _as_chain(model: MarkovChainModel | GmnlModel) -> MarkovChainModel:
    return model.to_chain() if isinstance(model, GmnlModel) else model


def _stopping_matrix(model: MarkovChainModel, masks: NDArray[np.bool_]) -> NDArray[np.float64]:
    mass = model.rho[:, 0] + masks @ model.rho[:, 1:].T
    return np.where(masks, model.stopping(model.alpha, mass), 0.0)


def simulate_walk(model: MarkovChainModel | GmnlModel, S: Iterable[int], seed) -> WalkOutcome:
    """One customer, simulated step by step."""
    model = _as_chain(model)
    mask = assortment_mask(S, model.n)
    mu = _stopping_matrix(model, mask[None, :])[0]
    rng = np.random.default_rng(seed)
    state = int(rng.choice(model.n + 1, p=model.lam))
    steps = 0
    while state != 0:
        if mask[state - 1] and rng.random() < mu[state - 1]:
            return WalkOutcome(state, steps)
        if steps >= MAX_STEPS:
            raise NonTerminationError(f"walk exceeded {MAX_STEPS} steps")
        state = int(rng.choice(model.n + 1, p=model.rho[state - 1]))
        steps += 1
    return WalkOutcome(0, steps)


def _walk_block(
    model: MarkovChainModel,
    masks: NDArray[np.bool_],
    rng: np.random.Generator,
) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
    # masks: m x n, one assortment per walk
    m = masks.shape[0]
    mu = _stopping_matrix(model, masks)
    cum_lam = np.cumsum(model.lam)
    cum_rho = np.cumsum(model.rho, axis=1)
    state = np.minimum(np.searchsorted(cum_lam, rng.random(m), side="right"), model.n)
    chosen = np.zeros(m, dtype=np.int64)
    steps = np.zeros(m, dtype=np.int64)
    active = np.flatnonzero(state != 0)
    for step in range(MAX_STEPS + 1):
        if active.size == 0:
            return chosen, steps
        if step == MAX_STEPS:
            raise NonTerminationError(f"{active.size} walks exceeded {MAX_STEPS} steps")
        cur = state[active]
        stop = rng.random(active.size) < mu[active, cur - 1]
        chosen[active[stop]] = cur[stop]
        active, cur = active[~stop], cur[~stop]
        u = rng.random(active.size)
        nxt = (cum_rho[cur - 1] <= u[:, None]).sum(axis=1)
        nxt = np.minimum(nxt, model.n)
        state[active] = nxt
        steps[active] += 1
        active = active[nxt != 0]
    raise AssertionError("unreachable")


def simulate_walks(
    model: MarkovChainModel | GmnlModel,
    assortments: Iterable[int] | NDArray[np.bool_],
    count: int | None = None,
    seed=0,
    threads: int | None = None,
) -> WalkBatch:
    """Simulate many independent walks.

    ``assortments`` is either one assortment (then ``count`` walks are run on
    it) or a ``T x n`` membership matrix with one row per walk.
    """
    model = _as_chain(model)
    arr = np.asarray(assortments)
    if arr.ndim == 2:
        masks = arr.astype(bool)
        if masks.shape[1] != model.n:
            raise ValueError(f"membership matrix must have {model.n} columns")
    else:
        if count is None or count <= 0:
            raise ValueError("count must be positive")
        masks = np.broadcast_to(assortment_mask(assortments, model.n), (count, model.n))
    total = masks.shape[0]
    starts = range(0, total, BLOCK)
    seeds = _seed_sequence(seed).spawn(len(starts))

    def run(b: int):
        lo = starts[b]
        return _walk_block(model, masks[lo : lo + BLOCK], np.random.default_rng(seeds[b]))

    if threads and threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, range(len(starts))))
    else:
        parts = [run(b) for b in range(len(starts))]
    return WalkBatch(
        chosen=np.concatenate([p[0] for p in parts]),
        steps=np.concatenate([p[1] for p in parts]),
    )


def uniform_nonempty_sampler(rng: np.random.Generator, T: int, n: int) -> NDArray[np.bool_]:
    """Uniform over the ``2^n - 1`` nonempty subsets (fair coins, redraw empty rows)."""
    masks = rng.random((T, n)) < 0.5
    empty = ~masks.any(axis=1)
    while empty.any():
        masks[empty] = rng.random((int(empty.sum()), n)) < 0.5
        empty = ~masks.any(axis=1)
    return masks


def fixed_size_sampler(k: int) -> Sampler:
    """Uniform over subsets of size exactly ``k``."""

    def sample(rng: np.random.Generator, T: int, n: int) -> NDArray[np.bool_]:
        if not 1 <= k <= n:
            raise ValueError(f"size {k} outside 1..{n}")
        order = np.argsort(rng.random((T, n)), axis=1)[:, :k]
        masks = np.zeros((T, n), dtype=bool)
        np.put_along_axis(masks, order, True, axis=1)
        return masks

    return sample


def generate_dataset(
    model: MarkovChainModel | GmnlModel,
    T: int,
    seed=0,
    sampler: Sampler = uniform_nonempty_sampler,
    features=None,
    threads: int | None = None,
) -> ChoiceDataset:
    """Draw ``T`` assortments and simulate one customer on each."""
    if T <= 0:
        raise ValueError("T must be positive")
    chain = _as_chain(model)
    assort_seed, walk_seed = _seed_sequence(seed).spawn(2)
    masks = sampler(np.random.default_rng(assort_seed), T, chain.n)
    batch = simulate_walks(chain, masks, seed=walk_seed, threads=threads)
    return ChoiceDataset(masks, batch.chosen, features)


def synthetic_features(
    n: int,
    d: int,
    rng: np.random.Generator,
    product_mean: float = -1.0,
    scale: float = 0.5,
) -> NDArray[np.float64]:
    """Feature matrix whose first column flags the no-purchase state.

    Products get ``N(product_mean, scale^2)`` entries in the remaining
    columns and a 0 in the first; state 0 is ``(1, 0, ..., 0)``. The first
    coefficient then sets ``v_0`` independently of the products.
    """
    X = np.zeros((n + 1, d))
    X[0, 0] = 1.0
    X[1:, 1:] = rng.normal(product_mean, scale, size=(n, d - 1))
    return X


def no_purchase_curve(
    n: int, alphas: Sequence[float], kmax: int | None = None
) -> tuple[NDArray[np.int64], NDArray[np.float64]]:
    """No-purchase probability of a ``k``-product assortment on the homogeneous model.

    Returns ``ks = 1..kmax`` and a ``kmax x len(alphas)`` table.
    """
    kmax = n if kmax is None else kmax
    if not 1 <= kmax <= n:
        raise ValueError(f"kmax must lie in 1..{n}")
    ks = np.arange(1, kmax + 1)
    table = np.empty((kmax, len(alphas)))
    for col, a in enumerate(alphas):
        model = homogeneous_model(n, a)
        for row, k in enumerate(ks):
            table[row, col] = gmnl_choice_probabilities(model, range(1, k + 1))[0]
    return ks, table


def star_graph_model(n: int, p: float, P: float, alpha: float) -> tuple[MarkovChainModel, NDArray[np.float64]]:
    """Star with centre product 1 (price ``p``) and leaves ``2..n`` (price ``P``).

    The centre moves uniformly to the other ``n`` states; each leaf moves to
    the centre or to no purchase with probability 1/2. Customers arrive
    uniformly at products.
    """
    if n < 3:
        raise ValueError("star graph needs n >= 3")
    if not 0 < p < P:
        raise ValueError("need 0 < p < P")
    rho = np.zeros((n, n + 1))
    rho[0, :] = 1.0 / n
    rho[0, 1] = 0.0
    rho[1:, 0] = 0.5
    rho[1:, 1] = 0.5
    lam = np.concatenate(([0.0], np.full(n, 1.0 / n)))
    prices = np.full(n, float(P))
    prices[0] = p
    return MarkovChainModel(lam=lam, rho=rho, alpha=alpha), prices


def star_graph_experiment(n: int, p: float, P: float, alpha: float) -> OptimizationResult:
    model, prices = star_graph_model(n, p, P, alpha)
    return brute_force_optimal(lambda S: expected_revenue(model, S, prices), n)
