"""No-purchase probability against assortment size on the homogeneous model."""

import argparse
from dataclasses import dataclass, field

from gmchoice.simulate import no_purchase_curve


@dataclass
class Config:
    n: int = 15
    alphas: list[float] = field(default_factory=lambda: [1.0, 2.0, 10.0])
    out: str = "no_purchase.dat"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=Config.n)
    ap.add_argument("--alphas", type=float, nargs="+", default=Config().alphas)
    ap.add_argument("--out", default=Config.out)
    cfg = Config(**vars(ap.parse_args()))
    ks, table = no_purchase_curve(cfg.n, cfg.alphas)
    with open(cfg.out, "w") as fh:
        fh.write("x " + " ".join(f"a{i + 1}" for i in range(len(cfg.alphas))) + "\n")
        for k, row in zip(ks, table):
            fh.write(f"{k} " + " ".join("%.17g" % x for x in row) + "\n")
    for col, a in enumerate(cfg.alphas):
        k = int(ks[table[:, col].argmin()])
        print(f"alpha={a:g}: minimum no-purchase probability {table[:, col].min():.4f} at k={k}")


if __name__ == "__main__":
    main()
