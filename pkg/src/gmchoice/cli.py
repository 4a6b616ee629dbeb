"""Command-line front end (``gmchoice <command> ...``).

Every command that writes ``--out`` also writes ``<out>.manifest.json``
describing the run. Exit codes: 0 success, 2 invalid input, 3 numerical
failure, 4 resource guard.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from gmchoice import io
from gmchoice.assortment import (
    BRUTE_FORCE_MAX_N,
    FptasConfig,
    ResourceGuardError,
    brute_force_gmnl,
    brute_force_optimal,
    build_partition_instance_large_alpha,
    build_partition_instance_small_alpha,
    fptas_gmnl,
    fptas_lowrank,
    has_partition,
)
from gmchoice.errors import ChoiceModelError
from gmchoice.estimation import (
    ALPHA_MAX,
    ChoiceDataset,
    GmnlParams,
    choice_scores,
    estimate_gmnl,
    estimate_mnl,
    log_likelihood,
    roc_auc,
)
from gmchoice.lowrank import LowRankModel, lowrank_revenue
from gmchoice.simulate import (
    fixed_size_sampler,
    generate_dataset,
    no_purchase_curve,
    simulate_walks,
    star_graph_experiment,
    uniform_nonempty_sampler,
)

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_GUARD = 0, 2, 3, 4


class RunManifest:
    """Provenance record written next to each output file."""

    def __init__(self, command: str, args: argparse.Namespace):
        self.command = command
        self.config = {k: v for k, v in sorted(vars(args).items()) if k not in ("handler", "needs_out")}
        self.inputs: dict[str, str] = {}
        self.outputs: list[str] = []
        self.started = time.perf_counter()
        self.started_at = datetime.now(timezone.utc).isoformat()

    def write(self, out: str | Path) -> None:
        doc = {
            "command": self.command,
            "inputs": self.inputs,
            "seed": self.config.get("seed"),
            "config": self.config,
            "outputs": self.outputs,
            "started_at": self.started_at,
            "wall_clock_seconds": time.perf_counter() - self.started,
        }
        io.write_atomic(f"{out}.manifest.json", io.dump_json(doc))


def _emit(manifest: RunManifest, out: str, text: str) -> None:
    io.write_atomic(out, text)
    manifest.outputs.append(str(out))
    manifest.write(out)


def _features(args, manifest: RunManifest):
    if getattr(args, "features", None) is None:
        return None
    manifest.inputs["features"] = args.features
    return io.read_features_csv(args.features)


def _load_model(args, manifest: RunManifest):
    manifest.inputs["params"] = args.params
    doc = io.load_params(args.params)
    return doc, io.model_from_document(doc, _features(args, manifest))


def cmd_fit(args) -> int:
    m = RunManifest("fit", args)
    X = _features(args, m)
    if X is None:
        raise ValueError("fit needs --features")
    m.inputs["data"] = args.data
    data = io.read_dataset_csv(args.data, features=X, drop_multi_click=args.drop_multi_click)
    if args.model == "mnl":
        beta = estimate_mnl(data)
        params, iters = GmnlParams(beta, 0.0), 1
        ll = log_likelihood(data, params)
    else:
        fit = estimate_gmnl(data, max_iters=args.max_iters, tol=args.tol, alpha_max=args.alpha_max)
        params, iters, ll = fit.params, fit.iterations, fit.loglik
    doc = io.params_document(args.model, data.n, params.beta, params.alpha, loglik=ll, iterations=iters)
    _emit(m, args.out, io.dump_json(doc))
    print(f"loglik {io.fmt(ll)} iterations {iters}")
    return EXIT_OK


def cmd_optimize(args) -> int:
    m = RunManifest("optimize", args)
    doc, model = _load_model(args, m)
    m.inputs["prices"] = args.prices
    prices = io.read_prices_csv(args.prices, model.n)
    config = FptasConfig(args.epsilon, parallel_guesses=args.threads > 1, threads=args.threads)
    if isinstance(model, LowRankModel):
        if args.method == "brute":
            res = brute_force_optimal(lambda S: lowrank_revenue(model, S, prices), model.n)
        else:
            res = fptas_lowrank(model, prices, config)
    elif args.method == "brute":
        if model.n > BRUTE_FORCE_MAX_N:
            raise ResourceGuardError(f"brute force limited to n <= {BRUTE_FORCE_MAX_N}; use --method fptas")
        res = brute_force_gmnl(model, prices)
    else:
        res = fptas_gmnl(model, prices, config)
    report: dict[str, Any] = {
        "assortment": list(res.assortment),
        "revenue": res.revenue,
        "method": res.method.value,
        "guesses": res.guesses_evaluated,
        "dp_states": res.dp_states,
    }
    if "target" in doc:
        report["target"] = doc["target"]
        report["target_met"] = bool(res.revenue >= doc["target"] - 1e-9)
    _emit(m, args.out, io.dump_json(report))
    print(f"revenue {io.fmt(res.revenue)} size {len(res.assortment)}")
    if "target_met" in report:
        print(f"target {io.fmt(doc['target'])} met {report['target_met']}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    m = RunManifest("simulate", args)
    _, model = _load_model(args, m)
    if isinstance(model, LowRankModel):
        model = model.to_chain()
    if args.T <= 0:
        raise ValueError("T must be positive")
    if args.assortment is not None:
        S = [int(x) for x in args.assortment.split(";") if x.strip()]
        if not S:
            raise ValueError("the fixed assortment is empty")
        batch = simulate_walks(model, S, args.T, seed=args.seed, threads=args.threads)
        mask = np.zeros(model.n, dtype=bool)
        mask[np.asarray(S) - 1] = True
        data = ChoiceDataset(np.tile(mask, (args.T, 1)), batch.chosen)
    else:
        sampler = fixed_size_sampler(args.size) if args.size else uniform_nonempty_sampler
        data = generate_dataset(model, args.T, seed=args.seed, sampler=sampler, threads=args.threads)
    _emit(m, args.out, io.format_dataset_csv(data))
    print(f"wrote {data.T} observations, no-purchase share {io.fmt(data.no_purchase.mean())}")
    return EXIT_OK


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def cmd_figure(args) -> int:
    m = RunManifest("figure", args)
    if args.name == "no-purchase":
        alphas = _floats(args.alphas or "1,2,10")
        ks, table = no_purchase_curve(args.n, alphas)
        header = "x " + " ".join(f"a{i + 1}" for i in range(len(alphas)))
        rows = [f"{k} " + " ".join(io.fmt(x) for x in row) for k, row in zip(ks, table)]
    elif args.name == "star":
        alphas = _floats(args.alphas or ",".join(str(a) for a in range(0, 13)))
        results = [star_graph_experiment(args.n, args.p, args.P, a) for a in alphas]
        center_only = [r.assortment == (1,) for r in results]
        # smallest alpha from which the centre alone stays optimal for the rest of the sweep
        threshold = next((alphas[i] for i in range(len(alphas)) if all(center_only[i:])), float("nan"))
        header = "alpha revenue size center_only above_threshold"
        rows = [
            f"{io.fmt(a)} {io.fmt(r.revenue)} {len(r.assortment)} {int(c)} {int(a >= threshold)}"
            for a, r, c in zip(alphas, results, center_only)
        ]
        print(f"threshold {io.fmt(threshold)}")
    elif args.name == "convergence":
        X = _features(args, m)
        if args.data is None or X is None:
            raise ValueError("convergence needs --data and --features")
        m.inputs["data"] = args.data
        data = io.read_dataset_csv(args.data, features=X)
        fit = estimate_gmnl(data, max_iters=args.max_iters, tol=args.tol, alpha_max=args.alpha_max)
        header = "iter loglik alpha"
        rows = [f"{i} {io.fmt(ll)} {io.fmt(a)}" for i, (ll, a) in enumerate(fit.history)]
    else:
        raise ValueError(f"unknown figure {args.name!r}")
    _emit(m, args.out, "\n".join([header, *rows]) + "\n")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    m = RunManifest("evaluate", args)
    X = _features(args, m)
    if X is None:
        raise ValueError("evaluate needs --features")
    m.inputs["holdout"] = args.holdout
    data = io.read_dataset_csv(args.holdout, features=X)
    report = []
    for i, path in enumerate(args.params):
        m.inputs[f"params{i}"] = path
        doc = io.load_params(path)
        scores, labels = choice_scores(io.params_from_document(doc), data)
        auc = roc_auc(scores, labels)
        report.append({"params": path, "model": doc["model"], "auc": auc})
        print(f"{doc['model']} {path} auc {io.fmt(auc)}")
    if args.out:
        _emit(m, args.out, io.dump_json({"metric": args.metric, "results": report}))
    return EXIT_OK


def cmd_gen_instance(args) -> int:
    m = RunManifest("gen-instance", args)
    c = np.array([int(x) for x in args.c.split(",") if x.strip()], dtype=np.int64)
    if args.alpha <= 1:
        model, prices, target = build_partition_instance_small_alpha(c, args.alpha, literal=args.literal)
    else:
        model, prices, target = build_partition_instance_large_alpha(c, args.alpha)
    doc = io.params_document(
        "gmnl", model.n, (), model.alpha, v=model.v, target=target, partition=has_partition(c)
    )
    io.write_atomic(args.prices_out, io.format_prices_csv(prices))
    m.outputs.append(args.prices_out)
    _emit(m, args.out, io.dump_json(doc))
    print(f"target {io.fmt(target)} partition {doc['partition']}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--epsilon", type=float, default=0.1)
    common.add_argument("--out")
    common.add_argument("--alpha-max", type=float, default=ALPHA_MAX)
    common.add_argument("--threads", type=int, default=1)

    parser = argparse.ArgumentParser(prog="gmchoice", description="Generalized Markov chain choice models")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", parents=[common], help="estimate MNL or GMNL parameters")
    p.add_argument("--data", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--model", choices=("mnl", "gmnl"), default="gmnl")
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--drop-multi-click", action="store_true")
    p.set_defaults(handler=cmd_fit, needs_out=True)

    p = sub.add_parser("optimize", parents=[common], help="choose a revenue-maximising assortment")
    p.add_argument("--params", required=True)
    p.add_argument("--features")
    p.add_argument("--prices", required=True)
    p.add_argument("--method", choices=("brute", "fptas"), default="fptas")
    p.set_defaults(handler=cmd_optimize, needs_out=True)

    p = sub.add_parser("simulate", parents=[common], help="generate a synthetic choice dataset")
    p.add_argument("--params", required=True)
    p.add_argument("--features")
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--size", type=int, help="offer uniformly random subsets of this size")
    p.add_argument("--assortment", help="offer this ';'-separated assortment every time")
    p.set_defaults(handler=cmd_simulate, needs_out=True)

    p = sub.add_parser("figure", parents=[common], help="emit figure data")
    p.add_argument("name", choices=("no-purchase", "star", "convergence"))
    p.add_argument("--n", type=int, default=15)
    p.add_argument("--alphas")
    p.add_argument("--p", type=float, default=0.9)
    p.add_argument("--P", type=float, default=1.0)
    p.add_argument("--data")
    p.add_argument("--features")
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(handler=cmd_figure, needs_out=True)

    p = sub.add_parser("evaluate", parents=[common], help="compare fitted models on holdout data")
    p.add_argument("--params", nargs="+", required=True)
    p.add_argument("--holdout", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--metric", choices=("auc",), default="auc")
    p.set_defaults(handler=cmd_evaluate, needs_out=False)

    p = sub.add_parser("gen-instance", parents=[common], help="partition-reduction instance")
    p.add_argument("--c", required=True, help="comma-separated positive integers")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--literal", action="store_true", help="use the uncorrected small-alpha prices")
    p.add_argument("--prices-out", required=True)
    p.set_defaults(handler=cmd_gen_instance, needs_out=True)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.needs_out and not args.out:
        parser.error(f"{args.command} needs --out")
    if args.threads < 1:
        parser.error("--threads must be at least 1")
    try:
        return args.handler(args)
    except ResourceGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (ChoiceModelError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
