#!/usr/bin/env python3

"""
SAMPLE COMMAND-LINE SCRIPT FOR TRAINING EVERY VARIANT ON ONE SPLIT

To run:

$ sample/sample_script.py --train output/linear_train.csv --test output/linear_test.csv

For documentation, type:

$ sample/sample_script.py -h

"""

import argparse
from argparse import ArgumentParser, Namespace

from typing import Any, List, Dict

from isurv import (
    ModelConfig,
    TrainedModel,
    FeaturePreprocessor,
    load_csv,
    build_grid,
    make_labels,
    train,
    predict_survival_curves,
    expected_times,
    concordance,
    integrated_brier,
)


def main() -> None:
    """Train iSurvM, iSurvQ, iSurvJ and iSurvJ(G) and report test metrics"""

    args: Namespace = parse_args()

    # Scaling and encoding come from the training file only
    preprocessor: FeaturePreprocessor
    train_set, preprocessor = load_csv(args.train)
    test_set, _ = load_csv(args.test, preprocessor)

    grid = build_grid(train_set.times, train_set.events)
    labels = make_labels(grid, train_set.times, train_set.events)

    variants: List[str] = ["isurvm", "isurvq", "isurvj", "isurvjg"]

    for variant in variants:
        try:
            config: ModelConfig = ModelConfig(variant=variant, epochs=args.epochs, seed=args.seed)
            model: TrainedModel = train(train_set, grid, labels, config)

            c, pairs, _ = concordance(
                expected_times(model, test_set.features), test_set.times, test_set.events
            )
            ibs: float = integrated_brier(
                predict_survival_curves(model, test_set.features), test_set, grid
            )

            scores: Dict[str, Any] = {"c_index": c, "pairs": pairs, "ibs": ibs}
            if args.verbose:
                scores["final_loss"] = model.final_loss

            print(f"{config.variant.value}: {scores}")

        except Exception as e:
            print(f"Error training {variant}: {e}")


def parse_args() -> Namespace:
    parser: ArgumentParser = argparse.ArgumentParser(
        description="Train every iSurv variant on one train/test split"
    )

    parser.add_argument("--train", required=True, help="Training CSV", type=str)
    parser.add_argument("--test", required=True, help="Test CSV", type=str)
    parser.add_argument("--epochs", default=300, help="Training epochs", type=int)
    parser.add_argument("--seed", default=0, help="Seed", type=int)
    parser.add_argument(
        "-v", "--verbose", dest="verbose", action="store_true", help="Verbose mode"
    )

    args: Namespace = parser.parse_args()
    return args


if __name__ == "__main__":
    main()

### END ###
