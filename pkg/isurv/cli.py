#!/usr/bin/env python3

"""
COMMAND-LINE INTERFACE

To run:

$ isurv generate --kind Linear -d 5
$ isurv train --data output/linear_train.csv --model isurvj
$ isurv eval --model-file output/model_isurvj.json --data output/linear_test.csv
$ isurv cv --kind Friedman1 --model isurvj --trials 4
$ isurv sweep --parameter censoring --models isurvjg,beran
$ isurv compare --kind Parabola --models isurvj,beran

For documentation, type:

$ isurv -h
$ isurv <command> -h

Settings come from `--config FILE` (flat key = value), then `--set key=value`,
then explicit flags. Failures print one JSON line to stderr and exit 1.
"""

import argparse
import json
import logging
import os
import sys
from argparse import ArgumentParser, Namespace
from dataclasses import asdict
from typing import Any, Dict, List, Optional

from .config import (
    apply_settings,
    check_keys,
    config_hash,
    output_dir,
    parse_overrides,
    read_config,
)
from .data import SyntheticKind, SyntheticSpec, read_table
from .errors import ISurvError
from .harness import (
    ExperimentConfig,
    SweepSpec,
    full_protocol,
    load_split,
    run_compare,
    run_cv,
    run_eval,
    run_generate,
    run_sweep,
    run_train,
    unconditional_protocol,
)
from .models import ModelConfig, Variant
from .readwrite import write_json

logger = logging.getLogger(__name__)


### SETTINGS ###


class Settings:
    """Effective configuration of one command."""

    def __init__(self, args: Namespace, flags: Dict[str, Any]) -> None:
        settings: Dict[str, Any] = read_config(args.config) if args.config else dict()
        settings.update(parse_overrides(args.set))
        settings.update({k: v for k, v in flags.items() if v is not None})

        if isinstance(settings.get("values"), str):
            settings["values"] = [float(v) for v in settings["values"].split(",") if v.strip()]
        elif isinstance(settings.get("values"), (int, float)):
            settings["values"] = [float(settings["values"])]

        check_keys(settings, ModelConfig, SyntheticSpec, ExperimentConfig, SweepSpec)

        self.model: ModelConfig = apply_settings(ModelConfig, settings)
        self.synthetic: SyntheticSpec = apply_settings(SyntheticSpec, settings)
        self.experiment: ExperimentConfig = apply_settings(ExperimentConfig, settings)
        self.sweep: SweepSpec = apply_settings(SweepSpec, settings)
        self.model.validate()

        self.hash: str = config_hash(args.config, self.effective())
        self.out: str = output_dir(args.output)

    def effective(self) -> Dict[str, Any]:
        synthetic: Dict[str, Any] = asdict(self.synthetic)
        synthetic["kind"] = self.synthetic.kind.value

        return {
            "model": self.model.to_dict(),
            "synthetic": synthetic,
            "experiment": asdict(self.experiment),
            "sweep": asdict(self.sweep),
        }


def _print_summary(title: str, summary: Dict[str, Any]) -> None:
    print()
    print(f"{title}:")
    for key in sorted(summary):
        value: Any = summary[key]
        if isinstance(value, (list, dict)):
            continue
        print(f"{key}: {value}")
    print()


### COMMANDS ###


def cmd_generate(args: Namespace) -> None:
    s: Settings = Settings(
        args,
        {
            "kind": args.kind,
            "n_train": args.n_train,
            "n_test": args.n_test,
            "d": args.d,
            "censor_prob": args.censor,
            "weibull_shape": args.shape,
            "sparsity": args.sparsity,
            "seed": args.seed,
        },
    )
    summary: Dict[str, Any] = run_generate(s.synthetic, s.out)
    _print_summary("Generated", summary)


def cmd_train(args: Namespace) -> None:
    s: Settings = Settings(args, {"variant": args.model, "epochs": args.epochs, "seed": args.seed})
    model_path: str = args.model_file or os.path.join(s.out, f"model_{s.model.variant.slug}.json")

    _, summary = run_train(args.data, s.model, model_path, timing=args.timing)
    summary["config_hash"] = s.hash
    summary["dataset"] = os.path.basename(args.data)

    write_json(os.path.join(s.out, f"train_{s.model.variant.slug}.json"), summary)
    _print_summary("Trained", summary)


def cmd_eval(args: Namespace) -> None:
    s: Settings = Settings(args, {"t_max": args.t_max})

    report = run_eval(args.model_file, args.data, s.experiment.t_max, timing=args.timing)
    report.config_hash = s.hash

    stem: str = os.path.splitext(os.path.basename(args.model_file))[0]
    write_json(os.path.join(s.out, f"eval_{stem}.json"), report.to_dict())
    _print_summary("Evaluation", report.to_dict())


def cmd_cv(args: Namespace) -> None:
    flags: Dict[str, Any] = {
        "data": args.data,
        "kind": args.kind,
        "outer_repeats": args.repeats,
        "outer_folds": args.folds,
        "inner_folds": args.inner_folds,
        "trials": args.trials,
        "max_epochs": args.max_epochs,
        "beran_tau": args.beran_tau,
        "jobs": args.jobs,
        "seed": args.seed,
    }
    if args.full_protocol:
        for key, value in full_protocol.items():
            if flags.get(key) is None:
                flags[key] = value
    s: Settings = Settings(args, flags)

    if s.experiment.data:
        dataset = read_table(s.experiment.data)
        tag: str = os.path.basename(s.experiment.data)
    else:
        dataset = load_split(s.experiment, s.synthetic)[0]
        tag = s.synthetic.kind.value

    for name in s.experiment.model_list() if args.model is None else [args.model]:
        aggregate: Dict[str, Any] = run_cv(dataset, name, s.model, s.experiment, s.out, tag)
        aggregate["config_hash"] = s.hash
        write_json(os.path.join(s.out, "cv", f"{name}_aggregate.json"), aggregate)
        print(
            f"{name}: C-index {aggregate['c_index']['mean']:.4f} ± {aggregate['c_index']['std']:.4f}, "
            f"IBS {aggregate['ibs']['mean']:.4f} ± {aggregate['ibs']['std']:.4f} "
            f"over {len(aggregate['folds'])} folds"
        )


def cmd_sweep(args: Namespace) -> None:
    s: Settings = Settings(
        args,
        {
            "parameter": args.parameter,
            "values": args.values,
            "repetitions": args.repetitions,
            "models": args.models,
            "curves": args.curves,
            "kind": args.kind,
            "beran_tau": args.beran_tau,
            "jobs": args.jobs,
            "seed": args.seed,
        },
    )

    rows: List[Dict[str, Any]] = run_sweep(s.sweep, s.synthetic, s.model, s.experiment, s.out)
    print(f"Wrote {len(rows)} rows to {os.path.join(s.out, f'sweep_{s.sweep.parameter}.csv')}")


def cmd_compare(args: Namespace) -> None:
    flags: Dict[str, Any] = {
        "data": args.data,
        "test_data": args.test_data,
        "models": args.models,
        "kind": args.kind,
        "beran_tau": args.beran_tau,
        "seed": args.seed,
    }
    if args.unconditional_protocol:
        overridden: Dict[str, Any] = parse_overrides(args.set)
        for key, value in unconditional_protocol.items():
            if key not in overridden:
                flags[key] = value
    s: Settings = Settings(args, flags)
    s.experiment.validate()

    train_set, test_set, tag = load_split(s.experiment, s.synthetic)
    result: Dict[str, Any] = run_compare(
        train_set, test_set, s.experiment.model_list(), s.model, s.experiment, s.out, tag
    )

    for name, report in result["reports"].items():
        print(
            f"{name}: C-index {report['c_index']:.4f}, IBS {report['ibs']:.4f}, "
            f"KS to Kaplan-Meier {result['ks_to_kaplan_meier'][name]:.4f}"
        )


### ARGUMENTS ###


def _kind(text: str) -> str:
    return SyntheticKind.parse(text).value


def _variant(text: str) -> str:
    return Variant.parse(text).value


def parse_args(argv: Optional[List[str]] = None) -> Namespace:
    parser: ArgumentParser = argparse.ArgumentParser(
        prog="isurv", description="Imprecise-label attention survival models"
    )
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v for progress, -vv for per-epoch losses"
    )

    common: ArgumentParser = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Flat key = value configuration file", type=str)
    common.add_argument(
        "--set", action="append", metavar="KEY=VALUE", help="Override one setting (repeatable)"
    )
    common.add_argument("-o", "--output", help="Output directory (default $ISURV_OUTPUT_DIR or ./output)")
    common.add_argument("--seed", type=int, help="Master seed")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="Write synthetic train/test CSVs")
    p.add_argument("--kind", type=_kind, help="Synthetic dataset kind (e.g., Linear)")
    p.add_argument("--n-train", dest="n_train", type=int)
    p.add_argument("--n-test", dest="n_test", type=int)
    p.add_argument("-d", type=int, help="Number of features")
    p.add_argument("--censor", type=float, help="Censoring probability")
    p.add_argument("--shape", type=float, help="Weibull shape")
    p.add_argument("--sparsity", type=float)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", parents=[common], help="Train a model on a CSV and save it")
    p.add_argument("--data", required=True, help="Training CSV")
    p.add_argument("--model", type=_variant, help="isurvm | isurvq | isurvj | isurvjg")
    p.add_argument("--epochs", type=int)
    p.add_argument("--model-file", dest="model_file", help="Where to write the model")
    p.add_argument("--timing", action="store_true", help="Include wall-clock runtime in the report")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="Evaluate a saved model on a CSV")
    p.add_argument("--model-file", dest="model_file", required=True)
    p.add_argument("--data", required=True, help="Evaluation CSV")
    p.add_argument("--t-max", dest="t_max", type=float, help="IBS horizon (default: largest time)")
    p.add_argument("--timing", action="store_true", help="Include wall-clock runtime in the report")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("cv", parents=[common], help="Nested stratified cross-validation")
    p.add_argument("--data", help="CSV dataset (default: synthetic from settings)")
    p.add_argument("--kind", type=_kind)
    p.add_argument("--model", choices=["isurvm", "isurvq", "isurvj", "isurvjg", "beran"])
    p.add_argument("--repeats", type=int, help="Outer repetitions")
    p.add_argument("--folds", type=int, help="Outer folds")
    p.add_argument("--inner-folds", dest="inner_folds", type=int)
    p.add_argument("--trials", type=int, help="Random-search trials per outer fold")
    p.add_argument("--max-epochs", dest="max_epochs", type=int)
    p.add_argument("--full-protocol", dest="full_protocol", action="store_true", help="4x5 outer, 3 inner folds")
    p.add_argument("--beran-tau", dest="beran_tau", type=float)
    p.add_argument("--jobs", type=int, help="Parallel jobs")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("sweep", parents=[common], help="Metric vs. feature count, censoring or k")
    p.add_argument("--parameter", choices=["features", "censoring", "k"])
    p.add_argument("--values", help="Comma-separated values (default: the full range)")
    p.add_argument("--repetitions", type=int)
    p.add_argument("--models", help="Comma-separated model names")
    p.add_argument("--curves", type=int, help="Test instances with emitted curve files per run")
    p.add_argument("--kind", type=_kind)
    p.add_argument("--beran-tau", dest="beran_tau", type=float)
    p.add_argument("--jobs", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", parents=[common], help="Train several models on one split")
    p.add_argument("--data", help="Training CSV (default: synthetic)")
    p.add_argument("--test-data", dest="test_data", help="Test CSV")
    p.add_argument("--models", help="Comma-separated model names")
    p.add_argument("--kind", type=_kind)
    p.add_argument(
        "--unconditional-protocol",
        dest="unconditional_protocol",
        action="store_true",
        help="Training settings for matching Kaplan-Meier (1000 epochs, no masking)",
    )
    p.add_argument("--beran-tau", dest="beran_tau", type=float)
    p.set_defaults(func=cmd_compare)

    args: Namespace = parser.parse_args(argv)
    return args


def main(argv: Optional[List[str]] = None) -> int:
    args: Namespace = parse_args(argv)

    level: int = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    try:
        args.func(args)
    except ISurvError as e:
        print(json.dumps({"error": e.code, "message": str(e)}), file=sys.stderr)
        return 1
    except OSError as e:
        print(json.dumps({"error": "io_error", "message": str(e)}), file=sys.stderr)
        return 1

    return 0


if __name__ == "__main__":
    sys.exit(main())

### END ###
