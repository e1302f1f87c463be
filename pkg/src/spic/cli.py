"""Command-line front door.

Subcommands: ``run`` (train and report), ``sbm`` (write a synthetic graph
directory), ``entropy`` (per-node attention entropy), ``oracle-check``
(power-iteration convergence against the dense eigendecomposition), and
``sweep`` (one run per axis value).

Heavy imports happen inside the handlers so that --threads / SPIC_THREADS
can cap the BLAS pool before numpy loads. Exit codes: 0 success, 1 runtime
error, 2 usage error. Delimited outputs get sibling .png figures unless
--no-figures is passed.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

AGG_FAMILIES = ("dad", "da", "agnn", "gat_sym", "gat_asym", "rl_sym", "rl_am")
ALL_FAMILIES = AGG_FAMILIES + ("appnp", "poly")
VARIANTS = ("linear", "relu1", "general", "w")

_THREAD_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
    "VECLIB_MAXIMUM_THREADS",
)


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _fmt(value: float) -> str:
    return f"{float(value):.6g}"


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="base random seed")
    p.add_argument("--threads", type=_positive_int, default=None,
                   help="cap BLAS worker threads (fallback: SPIC_THREADS)")
    p.add_argument("--no-figures", action="store_true",
                   help="skip rendering .png figures next to delimited outputs")


def _add_source(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--data", metavar="DIR", help="graph directory to load")
    group.add_argument("--sbm", metavar="BxS:PIN:POUT:LABELED",
                       help="inline block model, e.g. 2x200:0.05:0.005:10")
    p.add_argument("--sbm-dim", type=_positive_int, default=64, help="feature width for --sbm")
    p.add_argument("--sbm-features", choices=("random", "onehot"), default="random",
                   help="feature mode for --sbm")
    p.add_argument("--sbm-seed", type=int, default=0, help="generator seed for --sbm")


def _add_model(p: argparse.ArgumentParser, families=ALL_FAMILIES) -> None:
    p.add_argument("--model", required=True, choices=families, help="aggregator family")
    p.add_argument("--epsilon", type=float, default=1.0, help="cosine temperature (agnn)")
    p.add_argument("--attention-width", type=_positive_int, default=8,
                   help="attention projection width (gat families)")
    p.add_argument("--beta", type=float, default=0.0, help="diagonal shift on the aggregator")


def _add_train(p: argparse.ArgumentParser) -> None:
    p.add_argument("--variant", choices=VARIANTS, default="linear", help="trainable head")
    p.add_argument("--k", type=int, default=None,
                   help="propagation depth; omit to pick the better of {2,3} by validation")
    p.add_argument("--alpha", type=float, default=None, help="teleport weight (appnp only)")
    p.add_argument("--normalize", choices=("auto", "on", "off"), default="auto",
                   help="per-iteration column rescaling (auto: on for k > 5)")
    p.add_argument("--hidden", type=_positive_int, default=64, help="hidden width for relu1/general/w")
    p.add_argument("--epochs", type=_positive_int, default=100)
    p.add_argument("--runs", type=_positive_int, default=10)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--weight-decay", type=float, default=5e-4)
    p.add_argument("--metric", choices=("auto", "accuracy", "micro_f1"), default="auto")
    p.add_argument("--randomize-dim", type=_positive_int, default=None,
                   help="replace features with per-run U[0,1) draws of this width")
    p.add_argument("--reduce-dim", type=_positive_int, default=None,
                   help="keep only the leading feature columns")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spic",
        description="Subspace power iteration clustering: sparse aggregators, "
                    "power-iteration propagation, trainable heads, benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train a model and write a report CSV")
    _add_source(run)
    _add_model(run)
    _add_train(run)
    run.add_argument("--out", default="report.csv", help="report CSV path")
    _add_common(run)
    run.set_defaults(func=cmd_run)

    sbm = sub.add_parser("sbm", help="generate a block-model graph directory")
    sbm.add_argument("--blocks", type=_positive_int, required=True)
    sbm.add_argument("--size", type=_positive_int, required=True, help="nodes per block")
    sbm.add_argument("--pin", type=float, required=True, help="within-block edge probability")
    sbm.add_argument("--pout", type=float, required=True, help="cross-block edge probability")
    sbm.add_argument("--labeled", type=_positive_int, default=10, help="train nodes per block")
    sbm.add_argument("--dim", type=_positive_int, default=16, help="feature width")
    sbm.add_argument("--features", choices=("random", "onehot"), default="random")
    sbm.add_argument("--out", required=True, help="directory to write")
    _add_common(sbm)
    sbm.set_defaults(func=cmd_sbm)

    entropy = sub.add_parser("entropy", help="per-node attention entropy TSV + histogram CSV")
    _add_source(entropy)
    _add_model(entropy, families=AGG_FAMILIES)
    entropy.add_argument("--bins", type=_positive_int, default=30, help="histogram bins")
    entropy.add_argument("--out", default="entropy.tsv", help="entropy TSV path")
    _add_common(entropy)
    entropy.set_defaults(func=cmd_entropy)

    oracle = sub.add_parser("oracle-check", help="convergence CSV + spectral gap")
    _add_source(oracle)
    _add_model(oracle, families=AGG_FAMILIES)
    oracle.add_argument("--kmax", type=_positive_int, default=30, help="iterations to report")
    oracle.add_argument("--out", default="convergence.csv", help="convergence CSV path")
    _add_common(oracle)
    oracle.set_defaults(func=cmd_oracle_check)

    swp = sub.add_parser("sweep", help="one run per axis value, combined CSV")
    _add_source(swp)
    _add_model(swp)
    _add_train(swp)
    swp.add_argument("--axis", required=True, choices=("k", "beta", "feature_dim", "model_family"))
    swp.add_argument("--values", required=True, help="comma-separated axis values")
    swp.add_argument("--out", default="sweep.csv", help="combined CSV path")
    _add_common(swp)
    swp.set_defaults(func=cmd_sweep)

    return parser


def _configure_threads(parser: argparse.ArgumentParser, args) -> None:
    threads = args.threads
    if threads is None:
        raw = os.environ.get("SPIC_THREADS")
        if raw:
            try:
                threads = int(raw)
            except ValueError:
                threads = 0
            if threads < 1:
                parser.error(f"SPIC_THREADS must be a positive integer, got {raw!r}")
    if threads is not None:
        for var in _THREAD_VARS:
            os.environ[var] = str(threads)


def _parse_sbm_text(parser: argparse.ArgumentParser, args) -> None:
    args.sbm_parsed = None
    if getattr(args, "sbm", None) is None:
        return
    text = args.sbm
    try:
        head, pin, pout, labeled = text.split(":")
        blocks, size = head.lower().split("x")
        args.sbm_parsed = (int(blocks), int(size), float(pin), float(pout), int(labeled))
    except ValueError:
        parser.error(f"--sbm expects BLOCKSxSIZE:PIN:POUT:LABELED, got {text!r}")
    blocks, size, pin, pout, labeled = args.sbm_parsed
    if blocks < 2 or size < 2:
        parser.error("--sbm needs at least 2 blocks of at least 2 nodes")
    if not 0.0 <= pin <= 1.0 or not 0.0 <= pout <= 1.0:
        parser.error("--sbm probabilities must lie in [0, 1]")
    if not 0 < labeled <= size:
        parser.error("--sbm labeled count must lie in (0, size]")


def _validate(parser: argparse.ArgumentParser, args) -> None:
    command = args.command
    if command in ("run", "entropy", "oracle-check", "sweep"):
        _parse_sbm_text(parser, args)
        if args.model in ("rl_sym", "rl_am") and args.beta != 0.0:
            parser.error(f"--beta must be 0 for --model {args.model}")
    if command in ("run", "sweep"):
        if args.model == "appnp":
            alpha = 0.1 if args.alpha is None else args.alpha
            if not 0.0 < alpha < 1.0:
                parser.error("alpha must be in (0,1)")
            args.alpha = alpha
        elif args.alpha is not None:
            parser.error("--alpha only applies to --model appnp")
        if args.model in ("appnp", "poly") and args.variant != "linear":
            parser.error(f"--model {args.model} defines its own head; --variant must be linear")
        if args.model in ("appnp", "poly", "rl_sym", "rl_am") and args.beta != 0.0:
            parser.error(f"--beta must be 0 for --model {args.model}")
        if args.k is not None and args.k < 1:
            parser.error("--k must be >= 1")
        if args.randomize_dim is not None and args.reduce_dim is not None:
            parser.error("--reduce-dim is pointless with --randomize-dim")
    if command == "sbm":
        if not 0.0 <= args.pin <= 1.0 or not 0.0 <= args.pout <= 1.0:
            parser.error("--pin/--pout must lie in [0, 1]")
        if args.labeled > args.size:
            parser.error("--labeled must not exceed --size")
        if args.blocks < 2 or args.size < 2:
            parser.error("need at least 2 blocks of at least 2 nodes")
    if command == "sweep":
        raw = [v for v in args.values.split(",") if v.strip()]
        if not raw:
            parser.error("--values must list at least one value")
        try:
            if args.axis in ("k", "feature_dim"):
                parsed = [int(v) for v in raw]
                if any(v < 1 for v in parsed):
                    parser.error(f"--values for {args.axis} must be positive integers")
            elif args.axis == "beta":
                parsed = [float(v) for v in raw]
            else:
                parsed = [v.strip() for v in raw]
                bad = [v for v in parsed if v not in ALL_FAMILIES]
                if bad:
                    parser.error(f"unknown model families in --values: {', '.join(bad)}")
        except ValueError:
            parser.error(f"--values for axis {args.axis} could not be parsed: {args.values!r}")
        args.values_parsed = parsed
        if args.axis == "beta" and args.model in ("appnp", "poly", "rl_sym", "rl_am"):
            parser.error(f"--model {args.model} does not take a beta sweep")


def _data_spec(args):
    from .bench import DataSpec
    from .graphdata import SbmSpec

    randomize = getattr(args, "randomize_dim", None)
    reduce_dim = getattr(args, "reduce_dim", None)
    if args.data is not None:
        return DataSpec(path=args.data, reduce_dim=reduce_dim, randomize_dim=randomize)
    blocks, size, pin, pout, labeled = args.sbm_parsed
    spec = SbmSpec(
        blocks=blocks, block_size=size, p_in=pin, p_out=pout,
        labeled_per_block=labeled, feature_dim=args.sbm_dim,
        feature_mode=args.sbm_features, seed=args.sbm_seed,
    )
    return DataSpec(sbm=spec, reduce_dim=reduce_dim, randomize_dim=randomize)


def _model_spec(args):
    from .bench import ModelSpec

    return ModelSpec(
        family=args.model,
        variant=getattr(args, "variant", "linear"),
        k=getattr(args, "k", None),
        beta=args.beta,
        alpha=getattr(args, "alpha", None) or 0.1,
        epsilon=args.epsilon,
        hidden=getattr(args, "hidden", 64),
        normalize={"auto": None, "on": True, "off": False}[getattr(args, "normalize", "auto")],
        attention_width=args.attention_width,
    )


def _train_config(args):
    from .learn import TrainConfig

    return TrainConfig(
        lr=args.lr, weight_decay=args.weight_decay, epochs=args.epochs,
        runs=args.runs, seed=args.seed, metric=args.metric,
    )


def cmd_run(args) -> int:
    from . import bench, plots, reporting

    report = bench.run_experiment(_model_spec(args), _data_spec(args), _train_config(args))
    out = Path(args.out)
    reporting.write_report_csv([report], out)
    print(
        f"{report.model} on {report.dataset}: {report.metric} {_fmt(report.mean)} "
        f"+- {_fmt(report.std)} ({report.runs} runs, k={report.k})"
    )
    print(f"wrote {out}")
    if not args.no_figures:
        print(f"wrote {plots.report_figure(report, plots.sibling_figure_path(out))}")
    return 0


def cmd_sbm(args) -> int:
    from .graphdata import SbmSpec, generate_sbm, save_graph

    spec = SbmSpec(
        blocks=args.blocks, block_size=args.size, p_in=args.pin, p_out=args.pout,
        labeled_per_block=args.labeled, feature_dim=args.dim,
        feature_mode=args.features, seed=args.seed,
    )
    g = generate_sbm(spec)
    save_graph(g, args.out)
    print(f"wrote {args.out}: {g.num_nodes} nodes, {g.num_edges} edges, {g.num_classes} blocks")
    return 0


def _cli_aggregator(args, g):
    from .bench import ModelSpec, build_aggregator

    spec = ModelSpec(
        family=args.model, beta=args.beta, epsilon=args.epsilon,
        attention_width=args.attention_width,
    )
    spec.validate()
    return build_aggregator(spec, g, args.seed)


def cmd_entropy(args) -> int:
    from . import plots, reporting
    from .aggregators import attention_entropy

    g = _data_spec(args).resolve()
    values = attention_entropy(_cli_aggregator(args, g))
    out = Path(args.out)
    reporting.write_entropy_tsv(values, out)
    hist = out.with_name(out.stem + "_hist.csv")
    reporting.write_entropy_histogram_csv(values, hist, bins=args.bins)
    print(f"mean entropy {_fmt(values.mean())} nats over {g.num_nodes} nodes")
    print(f"wrote {out}")
    print(f"wrote {hist}")
    if not args.no_figures:
        print(f"wrote {plots.entropy_figure(values, plots.sibling_figure_path(out), bins=args.bins)}")
    return 0


def cmd_oracle_check(args) -> int:
    import numpy as np

    from . import plots, reporting
    from .propagation import convergence_report, spectral_oracle

    g = _data_spec(args).resolve()
    agg = _cli_aggregator(args, g)
    rng = np.random.default_rng(args.seed)
    v0 = 0.5 + rng.random(g.num_nodes)
    sims = convergence_report(agg, v0, args.kmax)
    oracle = spectral_oracle(agg)
    top = abs(oracle.eigenvalues[0])
    gap = abs(oracle.eigenvalues[1]) / top if g.num_nodes > 1 and top > 0 else 0.0
    out = Path(args.out)
    reporting.write_convergence_csv(sims, out)
    print(f"spectral gap |lambda_2|/|lambda_1| = {_fmt(gap)}")
    print(f"wrote {out}")
    if not args.no_figures:
        print(f"wrote {plots.convergence_figure(sims, plots.sibling_figure_path(out))}")
    return 0


def cmd_sweep(args) -> int:
    from . import bench, plots

    reports = bench.sweep(
        args.axis, args.values_parsed, _model_spec(args), _data_spec(args),
        _train_config(args), out_csv=Path(args.out),
    )
    for r in reports:
        print(f"{r.model} on {r.dataset}: {r.metric} {_fmt(r.mean)} +- {_fmt(r.std)} (k={r.k}, beta={_fmt(r.beta)})")
    print(f"wrote {args.out}")
    if not args.no_figures:
        if args.axis == "k":
            xs = [r.k for r in reports]
        elif args.axis == "beta":
            xs = [r.beta for r in reports]
        elif args.axis == "feature_dim":
            xs = sorted(args.values_parsed)
        else:
            xs = [r.model for r in reports]
        print(f"wrote {plots.sweep_figure(args.axis, xs, reports, plots.sibling_figure_path(Path(args.out)))}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_threads(parser, args)
    _validate(parser, args)
    try:
        return args.func(args)
    except Exception as exc:  # runtime failures exit 1 with a message
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
