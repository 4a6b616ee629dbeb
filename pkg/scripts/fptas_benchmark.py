"""Approximation gap and runtime of the rank-1 FPTAS against exhaustive search."""

import argparse
import time
from dataclasses import dataclass, field

import numpy as np

from gmchoice.assortment import FptasConfig, brute_force_gmnl, fptas_gmnl
from gmchoice.gmnl import random_gmnl_model


@dataclass
class Config:
    instances: int = 100
    n: int = 12
    epsilons: list[float] = field(default_factory=lambda: [0.05, 0.1, 0.25])
    seed: int = 0


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--instances", type=int, default=Config.instances)
    ap.add_argument("--n", type=int, default=Config.n)
    ap.add_argument("--epsilons", type=float, nargs="+", default=Config().epsilons)
    ap.add_argument("--seed", type=int, default=Config.seed)
    cfg = Config(**vars(ap.parse_args()))
    rng = np.random.default_rng(cfg.seed)
    cases = [(random_gmnl_model(cfg.n, rng), rng.uniform(1, 10, cfg.n)) for _ in range(cfg.instances)]
    opt = np.array([brute_force_gmnl(m, p).revenue for m, p in cases])
    print("epsilon max_gap median_gap seconds dp_states")
    for eps in cfg.epsilons:
        start = time.perf_counter()
        res = [fptas_gmnl(m, p, FptasConfig(eps)) for m, p in cases]
        secs = time.perf_counter() - start
        gaps = 1 - np.array([r.revenue for r in res]) / opt
        print(f"{eps:g} {gaps.max():.4f} {np.median(gaps):.4f} {secs:.2f} {res[0].dp_states}")


if __name__ == "__main__":
    main()
