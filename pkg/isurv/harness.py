"""
EXPERIMENT HARNESS

Jobs behind the CLI: generate, train, eval, nested cross-validation with a
seeded random hyperparameter search, parameter sweeps, and model comparison.
Folds, trials and sweep points are independent jobs run through joblib, each
with its own seed spawned from the master seed.
"""

import logging
import os
import time
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.stats import loguniform, randint, uniform
from sklearn.model_selection import ParameterSampler, StratifiedKFold

from .baselines import SurvivalCurve, beran_curves, kaplan_meier
from .data import (
    RawData,
    SurvivalDataset,
    SurvivalTable,
    SyntheticSpec,
    as_table,
    load_csv,
    make_dataset,
    prepare_split,
    read_table,
    save_csv,
)
from .errors import SchemaError, ShapeError, SizeError, UndefinedMetricError, ValidationError
from .grid import TimeGrid, build_grid, make_labels
from .metrics import (
    EvaluationReport,
    average_brier,
    brier_profile,
    concordance,
    ks_distance,
    unconditional_sf,
)
from .models import (
    ModelConfig,
    TrainedModel,
    Variant,
    expected_times,
    model_interval_survival,
    predict_survival,
    predict_survival_curves,
    train,
)
from .readwrite import load_model, save_model, write_csv, write_curve_table, write_curves, write_json

logger = logging.getLogger(__name__)

model_names: Tuple[str, ...] = ("isurvm", "isurvq", "isurvj", "isurvjg", "beran")


### CONFIGURATION ###


@dataclass
class ExperimentConfig:
    data: Optional[str] = None  # training CSV; None -> synthetic
    test_data: Optional[str] = None
    models: str = "isurvj,beran"  # comma-separated
    outer_repeats: int = 2
    outer_folds: int = 3
    inner_folds: int = 2
    trials: int = 10
    max_epochs: int = 300
    beran_tau: float = 0.1
    t_max: Optional[float] = None
    jobs: int = 1
    seed: int = 0

    def model_list(self) -> List[str]:
        return parse_models(self.models)

    def validate(self) -> None:
        if self.outer_folds < 2 or self.inner_folds < 2:
            raise ValidationError("Cross-validation needs at least 2 folds")
        if self.outer_repeats < 1 or self.trials < 1:
            raise ValidationError("Repeats and trials must be at least 1")
        if self.max_epochs < 20:
            raise ValidationError(f"max_epochs must be >= 20, got {self.max_epochs}")
        if self.beran_tau <= 0.0:
            raise ValidationError(f"Beran bandwidth must be positive, got {self.beran_tau}")
        for path in (self.data, self.test_data):
            if path and not os.path.isfile(os.path.expanduser(path)):
                raise ValidationError(f"Data file not found: {path}")
        self.model_list()


full_protocol: Dict[str, int] = {
    "outer_repeats": 4,
    "outer_folds": 5,
    "inner_folds": 3,
    "max_epochs": 2000,
}

# Training settings for comparing unconditional curves with Kaplan-Meier
unconditional_protocol: Dict[str, Any] = {
    "epochs": 1000,
    "lr": 1e-2,
    "gamma": 0.1,
    "p_mask": 0.0,
    "weight_decay": 2e-3,
    "embed_dim": 64,
    "batch_rate": 0.1,
    "dropout": 0.6,
}


def parse_models(text: str) -> List[str]:
    names: List[str] = [n.strip().lower() for n in text.split(",") if n.strip()]
    if not names:
        raise ValidationError("No models named")
    for name in names:
        if name not in model_names:
            raise ValidationError(f"Unknown model '{name}'; choose from {', '.join(model_names)}")

    return names


sweep_ranges: Dict[str, List[float]] = {
    "features": list(range(1, 11)),
    "censoring": [round(0.1 * i, 1) for i in range(0, 9)],
    "k": list(range(0, 21)),
}


@dataclass
class SweepSpec:
    parameter: str = "features"  # features | censoring | k
    values: List[float] = field(default_factory=list)  # empty -> the full range
    repetitions: int = 1
    curves: int = 3  # test instances per run with emitted curve files

    def __post_init__(self) -> None:
        if not self.values and self.parameter in sweep_ranges:
            self.values = list(sweep_ranges[self.parameter])

    def validate(self) -> None:
        if self.parameter not in sweep_ranges:
            raise ValidationError(
                f"Unknown sweep parameter '{self.parameter}'; choose from {', '.join(sweep_ranges)}"
            )
        allowed: List[float] = sweep_ranges[self.parameter]
        for v in self.values:
            if not min(allowed) <= v <= max(allowed):
                raise ValidationError(
                    f"{self.parameter} value {v} outside {min(allowed)}..{max(allowed)}"
                )
        if self.repetitions < 1:
            raise ValidationError("Sweeps need at least one repetition")


def job_seeds(seed: int, n: int) -> List[int]:
    """Independent per-job seeds spawned from the master seed."""

    children: List[np.random.SeedSequence] = np.random.SeedSequence(seed).spawn(n)

    return [int(s.generate_state(1)[0]) for s in children]


### FITTING & EVALUATION ###


@dataclass
class Fit:
    name: str
    curves: List[SurvivalCurve]
    pred_times: np.ndarray
    model: Optional[TrainedModel] = None


def fit_predict(
    name: str,
    train_set: SurvivalDataset,
    X_test: np.ndarray,
    config: ModelConfig,
    beran_tau: float,
) -> Fit:
    """Fit one named model on train_set and predict curves and expected times for X_test."""

    if name == "beran":
        curves: List[SurvivalCurve] = beran_curves(train_set, X_test, beran_tau)
        # Area under the curve ranks like an expected time
        return Fit(name, curves, np.array([c.integral() for c in curves]))

    grid: TimeGrid = build_grid(train_set.times, train_set.events)
    labels = make_labels(grid, train_set.times, train_set.events)
    model: TrainedModel = train(train_set, grid, labels, replace(config, variant=Variant.parse(name)))

    return Fit(
        name,
        predict_survival_curves(model, X_test),
        expected_times(model, X_test),
        model,
    )


def evaluate(
    name: str,
    curves: Sequence[SurvivalCurve],
    pred_times: np.ndarray,
    test: SurvivalDataset,
    grid: TimeGrid,
    dataset: str,
    seed: int,
    t_max: Optional[float] = None,
) -> EvaluationReport:
    c, pairs, tied = concordance(pred_times, test.times, test.events)
    points, values = brier_profile(curves, test, grid, t_max)

    return EvaluationReport(
        model=name,
        dataset=dataset,
        seed=seed,
        c_index=c,
        ibs=average_brier(points, values),
        brier_times=[float(t) for t in points],
        brier_values=[float(v) for v in values],
        n_pairs=pairs,
        n_tied=tied,
    )


def fit_evaluate(
    name: str,
    train_set: SurvivalDataset,
    test: SurvivalDataset,
    config: ModelConfig,
    exp: ExperimentConfig,
    dataset: str,
) -> Tuple[EvaluationReport, Fit]:
    fit: Fit = fit_predict(name, train_set, test.features, config, exp.beran_tau)
    grid: TimeGrid = build_grid(train_set.times, train_set.events)
    report: EvaluationReport = evaluate(
        name, fit.curves, fit.pred_times, test, grid, dataset, config.seed, exp.t_max
    )

    return report, fit


### GENERATE / TRAIN / EVAL ###


def run_generate(spec: SyntheticSpec, out_dir: str) -> Dict[str, Any]:
    spec.validate()
    train_set, test_set = make_dataset(spec)

    os.makedirs(out_dir, exist_ok=True)
    stem: str = spec.kind.value.lower()
    train_path: str = os.path.join(out_dir, f"{stem}_train.csv")
    test_path: str = os.path.join(out_dir, f"{stem}_test.csv")
    save_csv(train_set, train_path)
    save_csv(test_set, test_path)

    return {
        "kind": spec.kind.value,
        "seed": spec.seed,
        "n_train": train_set.n,
        "n_test": test_set.n,
        "d": train_set.d,
        "censored_fraction_train": train_set.censored_fraction,
        "censored_fraction_test": test_set.censored_fraction,
        "train": train_path,
        "test": test_path,
    }


def model_inputs(model: TrainedModel, data: RawData, source: str = "data") -> SurvivalDataset:
    """Map raw feature columns into the model's feature space with its training-fitted preprocessing."""

    if model.preprocessor is not None:
        dataset: SurvivalDataset = model.preprocessor.apply(data)
    elif isinstance(data, SurvivalDataset):
        dataset = data
    else:
        values: pd.DataFrame = data.frame.apply(pd.to_numeric, errors="coerce")
        if values.isna().any().any():
            raise SchemaError(f"{source} has non-numeric features and the model stores no encoding")
        dataset = SurvivalDataset(values.to_numpy(dtype=np.float64), data.times, data.events)

    if dataset.d != model.d:
        raise ShapeError(f"{source} has {dataset.d} features, the model expects {model.d}")

    return dataset


def run_train(
    data_path: str, config: ModelConfig, model_path: str, timing: bool = False
) -> Tuple[TrainedModel, Dict[str, Any]]:
    dataset, preprocessor = load_csv(data_path)
    grid: TimeGrid = build_grid(dataset.times, dataset.events)
    labels = make_labels(grid, dataset.times, dataset.events)

    tic: float = time.perf_counter()
    model: TrainedModel = train(dataset, grid, labels, config)
    runtime: float = time.perf_counter() - tic

    model = replace(model, preprocessor=preprocessor)
    save_model(model, model_path)

    summary: Dict[str, Any] = {
        "model": config.variant.value,
        "seed": config.seed,
        "n_train": model.N,
        "dropped": model.dropped,
        "intervals": model.grid.T,
        "epochs": config.epochs,
        "initial_loss": model.initial_loss,
        "final_loss": model.final_loss,
        "model_file": model_path,
    }
    if model.fine_tune_history:
        summary["fine_tune_loss"] = model.fine_tune_history[-1]
    if timing:
        summary["runtime"] = runtime

    return model, summary


def run_eval(
    model_path: str, data_path: str, t_max: Optional[float] = None, timing: bool = False
) -> EvaluationReport:
    model: TrainedModel = load_model(model_path)
    test: SurvivalDataset = model_inputs(model, read_table(data_path), data_path)

    tic: float = time.perf_counter()
    curves: List[SurvivalCurve] = predict_survival_curves(model, test.features)
    report: EvaluationReport = evaluate(
        model.config.variant.value,
        curves,
        expected_times(model, test.features),
        test,
        model.grid,
        os.path.basename(data_path),
        model.config.seed,
        t_max,
    )
    if timing:
        report.runtime = time.perf_counter() - tic

    return report


### NESTED CROSS-VALIDATION ###


def search_space(max_epochs: int) -> Dict[str, Any]:
    """Hyperparameter distributions, sampled uniformly (log-uniformly for scales)."""

    return {
        "lr": loguniform(1e-4, 1.0),
        "weight_decay": loguniform(1e-6, 5e-2),
        "gamma": loguniform(1e-6, 3.0),
        "dropout": uniform(0.3, 0.5),
        "p_mask": uniform(0.1, 0.4),
        "batch_rate": uniform(0.1, 0.9),
        "epochs": randint(20, max_epochs + 1),
        "k": randint(3, 11),
        "embed_dim": randint(64, 129),
    }


def sample_trials(n: int, max_epochs: int, seed: int) -> List[Dict[str, Any]]:
    sampler: ParameterSampler = ParameterSampler(search_space(max_epochs), n_iter=n, random_state=seed)

    return [{k: v.item() if isinstance(v, np.generic) else v for k, v in p.items()} for p in sampler]


def stratified_splits(
    events: np.ndarray, folds: int, seed: int
) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Folds that preserve the event/censored proportion."""

    n_events: int = int(np.sum(events))
    if n_events < folds:
        raise SizeError(f"{n_events} event(s) cannot be spread over {folds} folds")

    skf: StratifiedKFold = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed % (2**32))

    return list(skf.split(np.zeros((len(events), 1)), events))


def _trial_score(
    name: str,
    train_raw: SurvivalTable,
    params: Dict[str, Any],
    base: ModelConfig,
    exp: ExperimentConfig,
    seed: int,
) -> float:
    """Mean inner-fold C-index of one sampled configuration; preprocessing is refitted per inner fold."""

    config: ModelConfig = replace(base, seed=seed, **params)
    scores: List[float] = list()
    for tr, va in stratified_splits(train_raw.events, exp.inner_folds, seed):
        inner_train, inner_val, _ = prepare_split(train_raw.subset(tr), train_raw.subset(va))
        fit: Fit = fit_predict(name, inner_train, inner_val.features, config, exp.beran_tau)
        try:
            scores.append(concordance(fit.pred_times, inner_val.times, inner_val.events)[0])
        except UndefinedMetricError:
            logger.warning("Inner fold without admissible pairs skipped")

    return float(np.mean(scores)) if scores else float("-inf")


def _outer_fold(
    name: str,
    table: SurvivalTable,
    split: Tuple[int, int, np.ndarray, np.ndarray],
    base: ModelConfig,
    exp: ExperimentConfig,
    seed: int,
    tag: str,
) -> Dict[str, Any]:
    repeat, fold, tr, te = split
    train_raw: SurvivalTable = table.subset(tr)
    outer_train, outer_test, _ = prepare_split(train_raw, table.subset(te))

    best: Dict[str, Any] = dict()
    best_score: float = float("-inf")
    if name != "beran":
        trial_seeds: List[int] = job_seeds(seed, exp.trials)
        for params, trial_seed in zip(sample_trials(exp.trials, exp.max_epochs, seed), trial_seeds):
            score: float = _trial_score(name, train_raw, params, base, exp, trial_seed)
            logger.debug("%s r%d f%d trial %s -> %.4f", name, repeat, fold, params, score)
            if score > best_score:
                best, best_score = params, score

    config: ModelConfig = replace(base, seed=seed, **best)
    report, _ = fit_evaluate(name, outer_train, outer_test, config, exp, tag)

    return {
        "repeat": repeat,
        "fold": fold,
        "params": best,
        "inner_c_index": best_score if best else None,
        "test_event_fraction": float(outer_test.events.mean()),
        "report": report.to_dict(),
    }


def _mean_std(values: Sequence[float]) -> Dict[str, float]:
    a: np.ndarray = np.asarray(values, dtype=np.float64)

    return {"mean": float(a.mean()), "std": float(a.std(ddof=0))}


def run_cv(
    dataset: RawData,
    name: str,
    base: ModelConfig,
    exp: ExperimentConfig,
    out_dir: str,
    tag: str = "dataset",
) -> Dict[str, Any]:
    """
    Outer repeats x folds, each tuned by an inner stratified search; per-fold
    and aggregate JSON. Preprocessing is fitted on each training fold only.
    """

    exp.validate()
    table: SurvivalTable = as_table(dataset)
    splits: List[Tuple[int, int, np.ndarray, np.ndarray]] = list()
    for repeat, repeat_seed in enumerate(job_seeds(exp.seed, exp.outer_repeats)):
        for fold, (tr, te) in enumerate(stratified_splits(table.events, exp.outer_folds, repeat_seed)):
            splits.append((repeat, fold, tr, te))

    seeds: List[int] = job_seeds(exp.seed + 1, len(splits))
    folds: List[Dict[str, Any]] = Parallel(n_jobs=exp.jobs)(
        delayed(_outer_fold)(name, table, split, base, exp, s, tag) for split, s in zip(splits, seeds)
    )

    files: List[str] = list()
    for entry in folds:
        path: str = os.path.join(out_dir, "cv", f"{name}_r{entry['repeat']}_f{entry['fold']}.json")
        write_json(path, entry)
        files.append(path)

    aggregate: Dict[str, Any] = {
        "model": name,
        "dataset": tag,
        "seed": exp.seed,
        "layout": {
            "outer_repeats": exp.outer_repeats,
            "outer_folds": exp.outer_folds,
            "inner_folds": exp.inner_folds,
            "trials": exp.trials,
        },
        "c_index": _mean_std([f["report"]["c_index"] for f in folds]),
        "ibs": _mean_std([f["report"]["ibs"] for f in folds]),
        "folds": folds,
        "fold_files": files,
    }
    write_json(os.path.join(out_dir, "cv", f"{name}_aggregate.json"), aggregate)

    return aggregate


### SWEEPS ###


def matched_beran_ks(
    train_set: SurvivalDataset, X_test: np.ndarray, fit: Fit
) -> Tuple[float, float]:
    """
    Mean KS distance between an iSurvJ(G) fit and Beran curves built with the
    same learned Gaussian kernel. Without censoring the two curves coincide,
    so the distance isolates how each treats censored instances.
    """

    if fit.model is None or fit.model.config.variant is not Variant.JG:
        raise ValidationError("A kernel-matched Beran comparison needs an iSurvJ(G) fit")

    tau: float = float(fit.model.attention().tau.detach())
    matched: List[SurvivalCurve] = beran_curves(train_set, X_test, tau)
    ks: float = float(np.mean([ks_distance(a, b) for a, b in zip(fit.curves, matched)]))

    return ks, tau


def _sweep_point(
    sweep: SweepSpec,
    value: float,
    repetition: int,
    synthetic: SyntheticSpec,
    base: ModelConfig,
    exp: ExperimentConfig,
    seed: int,
    out_dir: str,
) -> List[Dict[str, Any]]:
    spec: SyntheticSpec = replace(synthetic, seed=seed)
    config: ModelConfig = replace(base, seed=seed)
    if sweep.parameter == "features":
        spec = replace(spec, d=int(value))
    elif sweep.parameter == "censoring":
        spec = replace(spec, censor_prob=float(value))
    else:
        config = replace(config, k=int(value))
    spec.validate()

    train_set, test_set, _ = prepare_split(*make_dataset(spec))
    tag: str = f"{spec.kind.value}_{sweep.parameter}{value}_rep{repetition}"

    rows: List[Dict[str, Any]] = list()
    fits: Dict[str, Fit] = dict()
    for name in exp.model_list():
        report, fit = fit_evaluate(name, train_set, test_set, config, exp, tag)
        fits[name] = fit
        rows.append(
            {
                "model": name,
                "parameter": sweep.parameter,
                "value": value,
                "repetition": repetition,
                "c_index": report.c_index,
                "ibs": report.ibs,
            }
        )

        if fit.model is not None and sweep.curves > 0:
            emitted: List[Tuple[int, SurvivalCurve, SurvivalCurve, SurvivalCurve]] = list()
            for i in range(min(sweep.curves, test_set.n)):
                lower, upper = model_interval_survival(fit.model, test_set.features[i])
                emitted.append((i, lower, predict_survival(fit.model, test_set.features[i]), upper))
            write_curves(os.path.join(out_dir, "curves", f"{name}_{tag}.csv"), emitted)

    if sweep.parameter == "censoring" and "isurvjg" in fits and "beran" in fits:
        ks, tau = matched_beran_ks(train_set, test_set.features, fits["isurvjg"])
        for row in rows:
            row["ks_distance"] = ks
            row["ks_tau"] = tau

    return rows


def run_sweep(
    sweep: SweepSpec,
    synthetic: SyntheticSpec,
    base: ModelConfig,
    exp: ExperimentConfig,
    out_dir: str,
) -> List[Dict[str, Any]]:
    """One row per (model, value, repetition); written as long-format CSV."""

    sweep.validate()
    exp.model_list()
    points: List[Tuple[float, int]] = [(v, r) for v in sweep.values for r in range(sweep.repetitions)]
    seeds: List[int] = job_seeds(exp.seed, len(points))

    batches: List[List[Dict[str, Any]]] = Parallel(n_jobs=exp.jobs)(
        delayed(_sweep_point)(sweep, v, r, synthetic, base, exp, s, out_dir)
        for (v, r), s in zip(points, seeds)
    )
    rows: List[Dict[str, Any]] = [row for batch in batches for row in batch]

    columns: List[str] = ["model", "parameter", "value", "repetition", "c_index", "ibs"]
    if any("ks_distance" in row for row in rows):
        columns += ["ks_distance", "ks_tau"]
    write_csv(os.path.join(out_dir, f"sweep_{sweep.parameter}.csv"), rows, columns)

    return rows


### COMPARE ###


def run_compare(
    train_raw: RawData,
    test_raw: RawData,
    names: Sequence[str],
    base: ModelConfig,
    exp: ExperimentConfig,
    out_dir: str,
    tag: str = "dataset",
) -> Dict[str, Any]:
    """
    Train every named model on one split. Emits per-model reports, each
    model's unconditional curve over the training features next to the
    Kaplan-Meier curve of the training set, and per-instance expected times
    next to the raw test features.
    """

    train_set, test_set, _ = prepare_split(train_raw, test_raw)
    km: SurvivalCurve = kaplan_meier(train_set.times, train_set.events)
    curves: Dict[str, SurvivalCurve] = {"kaplan_meier": km}
    reports: Dict[str, Any] = dict()
    ks_to_km: Dict[str, float] = dict()
    expected: Dict[str, np.ndarray] = dict()

    for name in names:
        report, fit = fit_evaluate(name, train_set, test_set, base, exp, tag)
        reports[name] = report.to_dict()
        expected[name] = fit.pred_times

        own: List[SurvivalCurve] = (
            beran_curves(train_set, train_set.features, exp.beran_tau)
            if fit.model is None
            else predict_survival_curves(fit.model, train_set.features)
        )
        population: SurvivalCurve = unconditional_sf(own)
        curves[name] = population
        ks_to_km[name] = ks_distance(population, km)

    write_curve_table(os.path.join(out_dir, "compare", "unconditional.csv"), curves)

    raw: pd.DataFrame = as_table(test_raw).frame
    columns: List[str] = [str(c) for c in raw.columns]
    rows: List[Dict[str, Any]] = list()
    for i in range(test_set.n):
        row: Dict[str, Any] = {"instance": i, "time": float(test_set.times[i]), "event": int(test_set.events[i])}
        for column in columns:
            row[column] = raw.at[i, column]
        for name in names:
            row[name] = float(expected[name][i])
        rows.append(row)
    write_csv(
        os.path.join(out_dir, "compare", "expected_times.csv"),
        rows,
        ["instance", "time", "event"] + columns + list(names),
    )

    result: Dict[str, Any] = {"dataset": tag, "reports": reports, "ks_to_kaplan_meier": ks_to_km}
    write_json(os.path.join(out_dir, "compare", "report.json"), result)

    return result


def load_split(exp: ExperimentConfig, synthetic: SyntheticSpec) -> Tuple[SurvivalTable, SurvivalTable, str]:
    """
    The raw train/test split named by the experiment: CSV files when given,
    else synthetic data. Callers fit preprocessing on the training side.
    """

    if exp.data:
        if not exp.test_data:
            raise ValidationError("A training CSV needs a matching test CSV")
        return read_table(exp.data), read_table(exp.test_data), os.path.basename(exp.data)

    synthetic.validate()
    train_set, test_set = make_dataset(synthetic)

    return SurvivalTable.from_dataset(train_set), SurvivalTable.from_dataset(test_set), synthetic.kind.value


### END ###
