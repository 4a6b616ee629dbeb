"""Optimal assortment on the star graph across a sweep of alpha."""

import argparse
from dataclasses import dataclass

import numpy as np

from gmchoice.simulate import star_graph_experiment


@dataclass
class Config:
    n: int = 10
    p: float = 0.9
    P: float = 1.0
    alpha_max: float = 12.0
    step: float = 0.5


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    for name, default in vars(Config()).items():
        ap.add_argument(f"--{name.replace('_', '-')}", dest=name, type=type(default), default=default)
    cfg = Config(**vars(ap.parse_args()))
    print("alpha revenue assortment")
    centre = []
    alphas = np.arange(0.0, cfg.alpha_max + 1e-9, cfg.step)
    for a in alphas:
        res = star_graph_experiment(cfg.n, cfg.p, cfg.P, float(a))
        centre.append(res.assortment == (1,))
        print(f"{a:g} {res.revenue:.6f} {list(res.assortment)}")
    first = next((alphas[i] for i in range(len(alphas)) if all(centre[i:])), None)
    print(f"centre alone optimal from alpha = {first}")


if __name__ == "__main__":
    main()
