"""Command-line interface.

Subcommands: experiment (cross-validated comparison on a CSV), train / evaluate
/ audit (single linear or ensemble models in the text format), and example1
(the two-test-scores walkthrough distribution).
"""

from __future__ import annotations

import argparse
import sys

from .features import MISSING, Dataset
from .harness import (
    DEFAULT_CLASSIFIERS,
    DEFAULT_MISSING_TOKENS,
    ExperimentConfig,
    StageError,
    example1,
    load_csv,
    run_experiment,
)
from .hc_ensemble import HcConfig, hc_train
from .linear_models import TrainConfig, load_model, save_model, train_iclr, train_logistic
from .strategic import as_handle, audit_truthfulness, strategic_accuracy, truthful_accuracy

TRAINABLE = ("iclr", "lr", "hc")


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", required=True, help="path to a headed CSV file")
    p.add_argument("--label", default="label", help="label column name")
    p.add_argument(
        "--positive-label",
        default=None,
        help="label value mapped to 1 (default: labels must be 0/1)",
    )
    p.add_argument(
        "--missing-tokens",
        default=",".join(t if t else "<empty>" for t in DEFAULT_MISSING_TOKENS),
        help="comma-separated tokens read as missing; use <empty> for the empty string",
    )


def _tokens(arg: str) -> tuple[str, ...]:
    return tuple("" if t == "<empty>" else t for t in arg.split(","))


def _load(args) -> Dataset:
    return load_csv(
        args.dataset,
        label=args.label,
        positive_label=args.positive_label,
        missing_tokens=_tokens(args.missing_tokens),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stratshield",
        description="Truthful classifiers for strategically withheld features",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_exp = sub.add_parser("experiment", help="cross-validated classifier comparison")
    _add_data_flags(p_exp)
    p_exp.add_argument("--epsilon", type=float, default=0.0, help="feature removal rate")
    p_exp.add_argument("--balance", action="store_true", help="undersample to balance classes")
    p_exp.add_argument("--top4", action="store_true", help="restrict to the top-4 F-ranked features")
    p_exp.add_argument("--discretize", action="store_true", help="entropy-discretize numeric features")
    p_exp.add_argument(
        "--classifiers",
        default=",".join(DEFAULT_CLASSIFIERS),
        help="comma-separated subset of mincut,hc,iclr,lr,maj,imp_lr,rf_lr",
    )
    p_exp.add_argument("--repeats", type=int, default=10, help="number of 50/50 repeats")
    p_exp.add_argument("--seed", type=int, default=0)
    p_exp.add_argument("--out", default=None, help="output path prefix for .csv/.txt/.png")
    p_exp.add_argument("--no-figure", action="store_true", help="skip the .png figure")
    p_exp.add_argument("--grid", action="store_true", help="small inner learning-rate grid")
    p_exp.add_argument("--threads", type=int, default=None, help="worker cap (overrides STRATSHIELD_THREADS)")
    p_exp.add_argument("--no-invert", action="store_true", help="train iclr without inverted feature copies")
    p_exp.add_argument("--clamp-intercept", action="store_true", help="project the iclr intercept to >= 0")

    p_train = sub.add_parser("train", help="train one model and write the text format")
    _add_data_flags(p_train)
    p_train.add_argument("--classifier", choices=TRAINABLE, default="iclr")
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--learning-rate", type=float, default=0.1)
    p_train.add_argument("--no-invert", action="store_true")
    p_train.add_argument("--clamp-intercept", action="store_true")
    p_train.add_argument("--out", default=None, help="model file path (default: stdout)")

    p_eval = sub.add_parser("evaluate", help="accuracy of a saved model on a CSV")
    _add_data_flags(p_eval)
    p_eval.add_argument("--model", required=True, help="model file from `train`")

    p_audit = sub.add_parser("audit", help="hunt for profitable withholding against a saved model")
    _add_data_flags(p_audit)
    p_audit.add_argument("--model", required=True)
    p_audit.add_argument(
        "--trials",
        type=int,
        default=None,
        help="random sub-reports per row (default: exhaustive lattice)",
    )
    p_audit.add_argument("--seed", type=int, default=0)

    sub.add_parser("example1", help="two-test-scores walkthrough: distribution, accept set, loss")
    return parser


def _cmd_experiment(args) -> int:
    cfg = ExperimentConfig(
        dataset=args.dataset,
        label=args.label,
        positive_label=args.positive_label,
        missing_tokens=_tokens(args.missing_tokens),
        epsilon=args.epsilon,
        balance=args.balance,
        feature_restriction="top4" if args.top4 else "none",
        discretize=args.discretize,
        classifiers=tuple(args.classifiers.split(",")),
        repeats=args.repeats,
        seed=args.seed,
        grid=args.grid,
        invert=not args.no_invert,
        clamp_intercept=args.clamp_intercept,
        threads=args.threads,
        out=args.out,
        figure=not args.no_figure,
    )
    result = run_experiment(cfg)
    sys.stdout.write(result.table_text)
    for f in result.files:
        print(f"wrote {f}")
    return 0


def _cmd_train(args) -> int:
    data = _load(args)
    cfg = TrainConfig(learning_rate=args.learning_rate, seed=args.seed)
    if args.classifier == "iclr":
        model = train_iclr(
            data, cfg, invert=not args.no_invert, clamp_intercept=args.clamp_intercept
        )
    elif args.classifier == "lr":
        model = train_logistic(data, cfg)
    else:
        k = min(4, data.schema.k)
        model = hc_train(data, HcConfig(strategy=("all_subsets_of_top_k", k), seed=args.seed))
    text = save_model(model, args.out)
    if args.out is None:
        sys.stdout.write(text)
    else:
        print(f"wrote {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    data = _load(args)
    model = load_model(args.model)
    handle = as_handle(model)
    tru = truthful_accuracy(handle, data)
    strat = strategic_accuracy(handle, data)
    print(f"rows {len(data.rows)}")
    print(f"truthful_accuracy {float(tru):.6f}")
    print(f"strategic_accuracy {float(strat):.6f}")
    print(f"truthful_flag {handle.truthful}")
    return 0


def _cmd_audit(args) -> int:
    data = _load(args)
    model = load_model(args.model)
    report = audit_truthfulness(model, data, trials_per_row=args.trials, seed=args.seed)
    print(f"checked {report.checked} reports, violations {len(report.violations)}")
    for x, r in report.violations[:10]:
        print(f"  gain by withholding: {x} -> {r}")
    print("ok" if report.ok else "NOT TRUTHFUL")
    return 0


def _sym(v) -> str:
    if v is MISSING:
        return "*"
    return "h" if v == 1 else "l"


def _cmd_example1() -> int:
    result = example1()
    dist = result.distribution
    print("vector  pos  neg   (counts over {})".format(dist.total))
    for x in sorted(dist.entries, key=lambda v: tuple(-1 if c is None else c for c in v), reverse=True):
        print(f"({_sym(x[0])},{_sym(x[1])})   {dist.pos(x):>3}  {dist.neg(x):>3}")
    accepted = sorted(
        result.accepted, key=lambda v: tuple(-1 if c is None else c for c in v), reverse=True
    )
    print("accept set:", ", ".join(f"({_sym(a)},{_sym(b)})" for a, b in accepted))
    print(f"loss {result.loss} = {float(result.loss)}")
    print(f"brute force agrees: {result.brute_force_loss == result.loss}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "experiment":
            return _cmd_experiment(args)
        if args.command == "train":
            return _cmd_train(args)
        if args.command == "evaluate":
            return _cmd_evaluate(args)
        if args.command == "audit":
            return _cmd_audit(args)
        return _cmd_example1()
    except StageError as exc:
        print(f"error {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
