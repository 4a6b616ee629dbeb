import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from gmchoice.chain import MarkovChainModel

settings.register_profile(
    "repo",
    deadline=None,
    derandomize=True,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("repo")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


seeds = st.integers(min_value=0, max_value=2**32 - 1)


def random_chain(rng: np.random.Generator, n: int, alpha: float | None = None) -> MarkovChainModel:
    lam = rng.dirichlet(np.ones(n + 1))
    rho = rng.dirichlet(np.ones(n + 1), size=n)
    if alpha is None:
        alpha = rng.uniform(0.0, 5.0)
    return MarkovChainModel(lam=lam, rho=rho, alpha=alpha)


def random_subset(rng: np.random.Generator, n: int) -> tuple[int, ...]:
    return tuple(int(i) + 1 for i in np.flatnonzero(rng.random(n) < 0.5))


def absorption_oracle(model: MarkovChainModel, S) -> np.ndarray:
    """Choice probabilities from repeated squaring of an augmented transition matrix.

    States: 0 (no purchase, absorbing), products 1..n (transient), and one
    absorbing "bought i" state per product. No linear solve is involved.
    """
    n = model.n
    mask = np.zeros(n, dtype=bool)
    mask[np.asarray(S, dtype=int) - 1] = True
    mass = model.rho[:, 0] + model.rho[:, 1:] @ mask
    mu = np.where(mask, np.exp(-model.alpha * mass), 0.0)
    size = 2 * n + 1
    P = np.zeros((size, size))
    P[0, 0] = 1.0
    for i in range(n):
        P[1 + i, : n + 1] = (1.0 - mu[i]) * model.rho[i]
        P[1 + i, n + 1 + i] = mu[i]
        P[n + 1 + i, n + 1 + i] = 1.0
    for _ in range(60):
        P = P @ P
    start = np.zeros(size)
    start[: n + 1] = model.lam
    final = start @ P
    return np.concatenate(([final[0]], final[n + 1 :]))
