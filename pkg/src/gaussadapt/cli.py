"""Command-line entry point.

Subcommands: ``run`` (adapt a dataset and write a JSON report), ``synth``
(write a synthetic benchmark as dataset files), ``ablate`` (the 2^3
component matrix), ``ordering`` (input-order comparison), ``inspect``
(dump bank and model state). Exit codes: 0 success, 1 usage error, 2
data/configuration error. The environment variable ``ADAPT_THREADS``
caps internal linear-algebra parallelism (0 or unset picks automatically).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import evaluate, io, synth
from .core import (
    DEFAULT_BANK_CAPACITY_ONLINE,
    DEFAULT_BANK_CAPACITY_TRANSDUCTIVE,
    DEFAULT_TAU,
    AdaptConfig,
    validate_config,
)
from .errors import GaussAdaptError, OrderingRequiresOnline
from .evaluate import (
    ablation_matrix,
    dataset_hash,
    format_report_table,
    ordering_experiment,
    report_json,
    run_mode,
    score,
)
from .iterative import DEFAULT_MAX_ITERS, DEFAULT_TOL

USAGE_EXIT = 1
DATA_EXIT = 2


class _Parser(argparse.ArgumentParser):
    """Argument parser that exits 1 on usage errors with a short hint."""

    def error(self, message):
        sys.stderr.write(f"error: {message}\n")
        self.print_usage(sys.stderr)
        raise SystemExit(USAGE_EXIT)


def _add_run_flags(p: _Parser) -> None:
    p.add_argument("--manifest", required=True, help="dataset manifest JSON")
    p.add_argument("--mode", choices=["online", "transductive"],
                   default="online")
    p.add_argument("--solver", choices=["closed", "iterative"],
                   default="closed")
    p.add_argument(
        "--bank-size", type=int, default=None,
        help="per-class bank capacity L (default: "
             f"{DEFAULT_BANK_CAPACITY_ONLINE} online, "
             f"{DEFAULT_BANK_CAPACITY_TRANSDUCTIVE} transductive)")
    p.add_argument("--alpha", type=float, default=0.9,
                   help="bank/prototype mean blend (default 0.9)")
    p.add_argument("--tau", type=float, default=None,
                   help="softmax temperature (default: manifest value, "
                        f"else {DEFAULT_TAU})")
    p.add_argument("--cov", choices=["shared", "per_class", "identity"],
                   default="shared", help="covariance mode (default shared)")
    p.add_argument("--order",
                   choices=["as_given", "shuffled", "easy_to_hard",
                            "hard_to_easy"],
                   default="as_given",
                   help="online stream order (default as_given)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-bank", action="store_true",
                   help="disable the knowledge bank")
    p.add_argument("--no-mean-update", action="store_true",
                   help="keep class means at the prototypes")
    p.add_argument("--no-cov-update", action="store_true",
                   help="keep the precision at the identity")
    p.add_argument("--insert-after-predict", action="store_true",
                   help="offer a sample to the bank only after its own "
                        "prediction")
    p.add_argument("--max-iters", type=int, default=DEFAULT_MAX_ITERS,
                   help="iterative solver cap (default 20)")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL,
                   help="iterative solver label tolerance (default 1e-5)")
    p.add_argument("--beta", type=float, default=1.0,
                   help="iterative solver prior strength (default 1.0)")
    p.add_argument("--out", default=None, help="write the JSON report here")


def _config_from_args(args, mode: str) -> AdaptConfig:
    if args.bank_size is not None:
        capacity = args.bank_size
    elif mode == "transductive":
        capacity = DEFAULT_BANK_CAPACITY_TRANSDUCTIVE
    else:
        capacity = DEFAULT_BANK_CAPACITY_ONLINE
    cfg = AdaptConfig(
        bank_capacity=capacity,
        alpha=args.alpha,
        tau=args.tau if args.tau is not None else DEFAULT_TAU,
        covariance_mode=args.cov,
        order=args.order,
        use_bank=not args.no_bank,
        update_means=not args.no_mean_update,
        update_covariance=not args.no_cov_update,
        beta=args.beta,
        seed=args.seed,
        insert_after_predict=args.insert_after_predict,
    )
    validate_config(cfg)
    return cfg


def _load(args):
    dataset = io.load_manifest(args.manifest)
    if args.tau is None and dataset.tau is not None:
        args.tau = dataset.tau
    return dataset


def _write_report(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_run(args) -> int:
    dataset = _load(args)
    cfg = _config_from_args(args, args.mode)
    result = run_mode(dataset.X, dataset.protos, cfg, args.mode, args.solver,
                      args.max_iters, args.tol)
    if dataset.labels is None:
        raise GaussAdaptError(
            "manifest has no labels; nothing to score"
        )
    report = score(result, dataset.labels, cfg, dataset_hash(dataset.X),
                   dataset.n_classes)
    _write_report(report_json(report), args.out)
    if args.out:
        print(format_report_table([report]))
    return 0


def _cmd_ablate(args) -> int:
    dataset = _load(args)
    cfg = _config_from_args(args, args.mode)
    reports = ablation_matrix(dataset.X, dataset.protos, dataset.labels, cfg,
                              args.mode)
    def row_label(rep):
        c = rep["config"]
        marks = ["bank" if c["use_bank"] else "----",
                 "mean" if c["update_means"] else "----",
                 "cov" if c["update_covariance"] else "---"]
        return " ".join(marks)
    print(format_report_table(reports, row_label))
    if args.out:
        Path(args.out).write_text(
            "[" + ",\n".join(report_json(r).rstrip() for r in reports) + "]\n"
        )
    return 0


def _cmd_ordering(args) -> int:
    if args.mode != "online":
        raise OrderingRequiresOnline(
            "the ordering experiment runs online only (pass --mode online)"
        )
    dataset = _load(args)
    cfg = _config_from_args(args, args.mode)
    reports = ordering_experiment(dataset.X, dataset.protos, dataset.labels,
                                  cfg, args.mode)
    print(format_report_table(reports,
                              lambda rep: rep["config"]["order"]))
    if args.out:
        Path(args.out).write_text(
            "[" + ",\n".join(report_json(r).rstrip() for r in reports) + "]\n"
        )
    return 0


def _cmd_inspect(args) -> int:
    dataset = _load(args)
    cfg = _config_from_args(args, args.mode)
    result = run_mode(dataset.X, dataset.protos, cfg, args.mode, args.solver,
                      args.max_iters, args.tol)
    if args.bank_out:
        import json
        Path(args.bank_out).write_text(
            json.dumps(result.bank.to_debug_dump(), indent=2) + "\n"
        )
    if args.means_out:
        io.write_embeddings(args.means_out, result.model.means)
    if args.cov_out:
        cov = result.model.covariance
        io.write_embeddings(args.cov_out, cov)
    fill = result.bank.fill_counts()
    print(f"mode={result.mode} n_bank={result.bank.total_count()} "
          f"bank_fill={fill} precision_mode={result.model.mode}")
    return 0


def _cmd_synth(args) -> int:
    spec = synth.SynthSpec(
        n_classes=args.classes,
        dim=args.dim,
        n_per_class=args.n_per_class,
        mean_separation=args.mean_separation,
        prototype_noise=args.prototype_noise,
        covariance_condition=args.cov_condition,
        seed=args.seed,
    )
    data = synth.generate(spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.write_embeddings(out / "features.adpt", data.X, pre_normalized=True)
    io.write_embeddings(out / "prototypes.adpt", data.protos,
                        pre_normalized=True)
    io.write_labels(out / "labels.adpl", data.labels)
    io.write_manifest(
        out / "manifest.json",
        features="features.adpt",
        prototypes="prototypes.adpt",
        labels="labels.adpl",
        class_names=[f"class_{k}" for k in range(spec.n_classes)],
        tau=synth.RECOMMENDED_TAU,
    )
    np.savez(out / "truth.npz", true_means=data.true_means,
             true_cov=data.true_cov)
    print(f"wrote {out / 'manifest.json'} "
          f"(N={data.X.shape[0]}, d={data.X.shape[1]}, "
          f"K={spec.n_classes})")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="gaussadapt",
                     description="Gaussian-discriminant test-time "
                                 "adaptation over embedding files")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="adapt one dataset, emit a report",
                           parents=[], conflict_handler="resolve")
    _add_run_flags(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_ablate = sub.add_parser("ablate",
                              help="all 2^3 component on/off combinations")
    _add_run_flags(p_ablate)
    p_ablate.set_defaults(func=_cmd_ablate)

    p_order = sub.add_parser("ordering",
                             help="shuffled vs confidence-ordered streams")
    _add_run_flags(p_order)
    p_order.set_defaults(func=_cmd_ordering)

    p_inspect = sub.add_parser("inspect",
                               help="run and dump bank/model state")
    _add_run_flags(p_inspect)
    p_inspect.add_argument("--bank-out", default=None,
                           help="bank debug dump JSON path")
    p_inspect.add_argument("--means-out", default=None,
                           help="class-means dump (embedding container)")
    p_inspect.add_argument("--cov-out", default=None,
                           help="covariance dump (embedding container)")
    p_inspect.set_defaults(func=_cmd_inspect)

    p_synth = sub.add_parser("synth",
                             help="write a synthetic benchmark dataset")
    p_synth.add_argument("--classes", type=int, default=10)
    p_synth.add_argument("--dim", type=int, default=32)
    p_synth.add_argument("--n-per-class", type=int, default=200)
    p_synth.add_argument("--mean-separation", type=float, default=1.0)
    p_synth.add_argument("--prototype-noise", type=float, default=0.3)
    p_synth.add_argument("--cov-condition", type=float, default=5.0)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out-dir", required=True)
    p_synth.set_defaults(func=_cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    threads = int(os.environ.get("ADAPT_THREADS", "0") or "0")
    try:
        if threads > 0:
            from threadpoolctl import threadpool_limits
            with threadpool_limits(limits=threads):
                return args.func(args)
        return args.func(args)
    except GaussAdaptError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return DATA_EXIT
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
