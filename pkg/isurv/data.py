"""
SURVIVAL DATASETS

CSV ingestion with preprocessing, and synthetic generators with Weibull event
times and Bernoulli censoring.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.special import gamma as gamma_fn
from sklearn.preprocessing import OneHotEncoder, StandardScaler

from .errors import DomainError, SchemaError, ShapeError, SizeError, ValidationError

logger = logging.getLogger(__name__)

time_column: str = "time"
event_column: str = "event"


### DATASET ###


@dataclass(frozen=True)
class SurvivalDataset:
    """Feature matrix with an event/censoring time and an event indicator per row."""

    features: np.ndarray
    times: np.ndarray
    events: np.ndarray
    feature_names: Optional[Tuple[str, ...]] = None

    def __post_init__(self) -> None:
        features: np.ndarray = np.array(self.features, dtype=np.float64, ndmin=2)
        times: np.ndarray = np.array(self.times, dtype=np.float64).ravel()
        events: np.ndarray = np.array(self.events).ravel()

        if features.shape[0] != times.shape[0] or times.shape[0] != events.shape[0]:
            raise SizeError(
                f"Row counts differ: features {features.shape[0]}, times {times.shape[0]}, events {events.shape[0]}"
            )
        if times.shape[0] < 2:
            raise SizeError(f"A dataset needs at least 2 rows, got {times.shape[0]}")
        if not np.all(np.isfinite(features)):
            raise ValidationError("Features contain missing or non-finite values")
        if not np.all(np.isfinite(times)) or np.any(times < 0):
            raise ValidationError("Times must be finite and non-negative")
        if not np.all(np.isin(events, [0, 1])):
            raise ValidationError("Event indicators must be 0 or 1")
        events = events.astype(np.int64)
        if events.sum() < 1:
            raise SizeError("A dataset needs at least one observed event")

        names: Optional[Tuple[str, ...]] = None
        if self.feature_names is not None:
            names = tuple(str(n) for n in self.feature_names)
            if len(names) != features.shape[1]:
                raise SchemaError(
                    f"{len(names)} feature names for {features.shape[1]} feature columns"
                )

        for a in (features, times, events):
            a.setflags(write=False)

        object.__setattr__(self, "features", features)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "events", events)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return int(self.times.shape[0])

    @property
    def d(self) -> int:
        return int(self.features.shape[1])

    @property
    def columns(self) -> List[str]:
        if self.feature_names is not None:
            return list(self.feature_names)
        return [f"feature_{j}" for j in range(self.d)]

    @property
    def censored_fraction(self) -> float:
        return float(1.0 - self.events.mean())

    def subset(self, indices: Sequence[int] | np.ndarray) -> "SurvivalDataset":
        idx: np.ndarray = np.asarray(indices, dtype=np.int64)

        return SurvivalDataset(
            self.features[idx], self.times[idx], self.events[idx], self.feature_names
        )


### RAW TABLES ###


@dataclass(frozen=True, eq=False)
class SurvivalTable:
    """Feature columns as read, before preprocessing, with times and events."""

    frame: pd.DataFrame
    times: np.ndarray
    events: np.ndarray

    def __post_init__(self) -> None:
        times: np.ndarray = np.array(self.times, dtype=np.float64).ravel()
        events: np.ndarray = np.array(self.events, dtype=np.int64).ravel()
        if len(self.frame) != times.size or times.size != events.size:
            raise SizeError(
                f"Row counts differ: features {len(self.frame)}, times {times.size}, events {events.size}"
            )
        if self.frame.shape[1] == 0:
            raise SchemaError("A table needs at least one feature column")

        times.setflags(write=False)
        events.setflags(write=False)
        object.__setattr__(self, "frame", self.frame.reset_index(drop=True))
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "events", events)

    @property
    def n(self) -> int:
        return int(self.times.shape[0])

    def subset(self, indices: Sequence[int] | np.ndarray) -> "SurvivalTable":
        idx: np.ndarray = np.asarray(indices, dtype=np.int64)

        return SurvivalTable(self.frame.iloc[idx], self.times[idx], self.events[idx])

    @classmethod
    def from_dataset(cls, dataset: SurvivalDataset) -> "SurvivalTable":
        return cls(pd.DataFrame(dataset.features, columns=dataset.columns), dataset.times, dataset.events)


RawData = SurvivalTable | SurvivalDataset


def as_table(data: RawData) -> SurvivalTable:
    return data if isinstance(data, SurvivalTable) else SurvivalTable.from_dataset(data)


### PREPROCESSING ###


@dataclass(frozen=True, eq=False)
class FeaturePreprocessor:
    """
    Feature map fitted on a training table: numeric columns are z-scored,
    every other column is one-hot encoded. Levels unseen at fit time encode
    as all zeros.
    """

    numeric: Tuple[str, ...]
    categorical: Tuple[str, ...]
    scaler: Optional[StandardScaler] = None
    encoder: Optional[OneHotEncoder] = None

    @property
    def levels(self) -> Tuple[Tuple[str, ...], ...]:
        if self.encoder is None:
            return ()
        return tuple(tuple(str(v) for v in cats) for cats in self.encoder.categories_)

    @property
    def feature_names(self) -> Tuple[str, ...]:
        names: List[str] = list(self.numeric)
        for column, levels in zip(self.categorical, self.levels):
            names.extend(f"{column}={level}" for level in levels)

        return tuple(names)

    @property
    def d(self) -> int:
        return len(self.feature_names)

    @property
    def mean(self) -> np.ndarray:
        return np.zeros(0) if self.scaler is None else np.asarray(self.scaler.mean_)

    @property
    def scale(self) -> np.ndarray:
        return np.zeros(0) if self.scaler is None else np.asarray(self.scaler.scale_)

    def transform(self, frame: pd.DataFrame) -> np.ndarray:
        fitted: Tuple[str, ...] = self.numeric + self.categorical
        missing: List[str] = [c for c in fitted if c not in frame.columns]
        if missing:
            raise SchemaError(f"Feature column(s) missing: {', '.join(missing)}")
        extra: List[str] = [str(c) for c in frame.columns if str(c) not in fitted]
        if extra:
            raise ShapeError(
                f"{frame.shape[1]} feature columns where {len(fitted)} were fitted; unexpected: {', '.join(extra)}"
            )

        blocks: List[np.ndarray] = list()
        if self.scaler is not None:
            values: pd.DataFrame = frame[list(self.numeric)].apply(pd.to_numeric, errors="coerce")
            if values.isna().any().any():
                raise SchemaError("Numeric feature columns contain non-numeric values")
            blocks.append(self.scaler.transform(values.to_numpy(dtype=np.float64)))
        if self.encoder is not None:
            blocks.append(self.encoder.transform(frame[list(self.categorical)].astype(str)))

        return np.hstack(blocks).astype(np.float64)

    def apply(self, data: RawData) -> SurvivalDataset:
        table: SurvivalTable = as_table(data)

        return SurvivalDataset(self.transform(table.frame), table.times, table.events, self.feature_names)

    @classmethod
    def restore(
        cls,
        numeric: Sequence[str],
        mean: np.ndarray,
        scale: np.ndarray,
        categorical: Sequence[str],
        levels: Sequence[Sequence[str]],
    ) -> "FeaturePreprocessor":
        """Rebuild a fitted preprocessor from its stored statistics and levels."""

        numeric = tuple(str(c) for c in numeric)
        categorical = tuple(str(c) for c in categorical)
        if len(mean) != len(numeric) or len(scale) != len(numeric) or len(levels) != len(categorical):
            raise SchemaError("Stored preprocessing does not match its column lists")

        scaler: Optional[StandardScaler] = None
        if numeric:
            scaler = StandardScaler()
            scaler.mean_ = np.asarray(mean, dtype=np.float64)
            scaler.scale_ = np.asarray(scale, dtype=np.float64)
            scaler.var_ = scaler.scale_**2
            scaler.n_features_in_ = len(numeric)
            scaler.n_samples_seen_ = 0

        encoder: Optional[OneHotEncoder] = None
        if categorical:
            cats: List[List[str]] = [[str(v) for v in lv] for lv in levels]
            rows: int = max(len(lv) for lv in cats)
            seed_frame: pd.DataFrame = pd.DataFrame(
                {c: [lv[min(i, len(lv) - 1)] for i in range(rows)] for c, lv in zip(categorical, cats)}
            )
            encoder = OneHotEncoder(categories=cats, handle_unknown="ignore", sparse_output=False)
            encoder.fit(seed_frame)

        return cls(numeric, categorical, scaler, encoder)


def fit_preprocessor(data: RawData) -> FeaturePreprocessor:
    """Fit scaling and encoding on training rows only."""

    frame: pd.DataFrame = as_table(data).frame
    numeric: List[str] = list()
    categorical: List[str] = list()
    for column in frame.columns:
        # Any non-numeric value makes the whole column categorical
        if pd.to_numeric(frame[column], errors="coerce").isna().any():
            categorical.append(str(column))
        else:
            numeric.append(str(column))

    scaler: Optional[StandardScaler] = None
    if numeric:
        scaler = StandardScaler().fit(frame[numeric].apply(pd.to_numeric).to_numpy(dtype=np.float64))

    encoder: Optional[OneHotEncoder] = None
    if categorical:
        encoder = OneHotEncoder(handle_unknown="ignore", sparse_output=False)
        encoder.fit(frame[categorical].astype(str))

    return FeaturePreprocessor(tuple(numeric), tuple(categorical), scaler, encoder)


def prepare_split(
    train: RawData, test: RawData
) -> Tuple[SurvivalDataset, SurvivalDataset, FeaturePreprocessor]:
    """Fit preprocessing on train and apply it to both sides."""

    preprocessor: FeaturePreprocessor = fit_preprocessor(train)

    return preprocessor.apply(train), preprocessor.apply(test), preprocessor


### CSV INGESTION & EXPORT ###


def read_table(
    path: str, time_column: str = time_column, event_column: str = event_column
) -> SurvivalTable:
    """Read a survival CSV as raw feature columns; rows with missing values are rejected."""

    frame: pd.DataFrame = pd.read_csv(path, encoding="utf-8")

    for column in (time_column, event_column):
        if column not in frame.columns:
            raise SchemaError(f"Column '{column}' not found in {path}")

    missing: pd.Series = frame.isna().any(axis=1)
    if missing.any():
        logger.warning(
            "Rejected %d row(s) with missing values in %s", int(missing.sum()), path
        )
        frame = frame.loc[~missing].reset_index(drop=True)

    if len(frame) < 2:
        raise SizeError(f"{path} has {len(frame)} usable row(s); at least 2 are needed")

    events: pd.Series = pd.to_numeric(frame[event_column], errors="coerce")
    if events.isna().any() or not events.isin([0, 1]).all():
        raise ValidationError(f"Column '{event_column}' must contain only 0 and 1")

    times: pd.Series = pd.to_numeric(frame[time_column], errors="coerce")
    if times.isna().any() or (times < 0).any():
        raise ValidationError(f"Column '{time_column}' must be numeric and non-negative")

    features: pd.DataFrame = frame.drop(columns=[time_column, event_column])
    if features.shape[1] == 0:
        raise SchemaError(f"{path} has no feature columns")

    return SurvivalTable(features, times.to_numpy(dtype=np.float64), events.to_numpy(dtype=np.int64))


def load_csv(
    path: str,
    preprocessor: Optional[FeaturePreprocessor] = None,
    time_column: str = time_column,
    event_column: str = event_column,
) -> Tuple[SurvivalDataset, FeaturePreprocessor]:
    """
    Load a survival CSV as model-ready features. Without a preprocessor one
    is fitted on this file (the training side); pass the training file's
    preprocessor when loading held-out data.
    """

    table: SurvivalTable = read_table(path, time_column, event_column)
    if preprocessor is None:
        preprocessor = fit_preprocessor(table)

    return preprocessor.apply(table), preprocessor


def save_csv(dataset: SurvivalDataset, path: str) -> None:
    """Write a dataset in the `feature_*`, `time`, `event` schema."""

    frame: pd.DataFrame = pd.DataFrame(dataset.features, columns=dataset.columns)
    frame[time_column] = dataset.times
    frame[event_column] = dataset.events
    frame.to_csv(path, index=False)


### SYNTHETIC DATA ###


class SyntheticKind(str, Enum):
    FRIEDMAN1 = "Friedman1"
    FRIEDMAN2 = "Friedman2"
    FRIEDMAN3 = "Friedman3"
    INTERACTIONS = "Interactions"
    SPARSE = "Sparse"
    NONLINEAR = "Nonlinear"
    NOISY = "Noisy"
    LINEAR = "Linear"
    QUADRATIC = "Quadratic"
    PARABOLA = "Parabola"

    @classmethod
    def parse(cls, name: "str | SyntheticKind") -> "SyntheticKind":
        if isinstance(name, SyntheticKind):
            return name
        for kind in cls:
            if kind.value.lower() == str(name).lower():
                return kind
        raise ValidationError(
            f"Unknown dataset kind '{name}'; choose from {', '.join(k.value for k in cls)}"
        )


min_features: Dict[SyntheticKind, int] = {
    SyntheticKind.FRIEDMAN1: 5,
    SyntheticKind.FRIEDMAN2: 4,
    SyntheticKind.FRIEDMAN3: 4,
    SyntheticKind.INTERACTIONS: 2,
    SyntheticKind.SPARSE: 1,
    SyntheticKind.NONLINEAR: 5,
    SyntheticKind.NOISY: 1,
    SyntheticKind.LINEAR: 1,
    SyntheticKind.QUADRATIC: 1,
    SyntheticKind.PARABOLA: 1,
}

default_shape: float = 5.0
noisy_shape: float = 1.0

parabola_segments: List[Tuple[float, float, int]] = [
    (-5.0, -2.0, 200),
    (-2.0, 2.0, 10),
    (2.0, 5.0, 200),
]


@dataclass
class SyntheticSpec:
    kind: SyntheticKind = SyntheticKind.LINEAR
    n_train: int = 500
    n_test: int = 300
    d: int = 5
    weibull_shape: Optional[float] = None  # None -> 5, or 1 for Noisy
    censor_prob: float = 0.2
    sparsity: float = 0.2
    seed: int = 0
    x0: float = 0.0  # Parabola minimum

    def __post_init__(self) -> None:
        self.kind = SyntheticKind.parse(self.kind)
        if self.kind == SyntheticKind.PARABOLA:
            self.d = 1
        if self.weibull_shape is None:
            self.weibull_shape = (
                noisy_shape if self.kind == SyntheticKind.NOISY else default_shape
            )

    def validate(self) -> None:
        if self.d < min_features[self.kind]:
            raise ValidationError(
                f"{self.kind.value} needs at least {min_features[self.kind]} features, got {self.d}"
            )
        if self.n_train < 2 or self.n_test < 2:
            raise SizeError("Train and test splits need at least 2 rows each")
        if self.weibull_shape is None or self.weibull_shape <= 0:
            raise DomainError(f"Weibull shape must be positive, got {self.weibull_shape}")
        if not 0.0 <= self.censor_prob < 1.0:
            raise DomainError(f"Censoring probability must be in [0,1), got {self.censor_prob}")
        if not 0.0 < self.sparsity < 1.0:
            raise DomainError(f"Sparsity must be in (0,1), got {self.sparsity}")


def draw_coefficients(
    kind: SyntheticKind, d: int, rng: np.random.Generator
) -> Dict[str, Any]:
    """Draw the random coefficients a kind's response formula needs."""

    if kind in (SyntheticKind.LINEAR, SyntheticKind.NOISY, SyntheticKind.SPARSE):
        return {"w": rng.uniform(0.0, 1.0, size=d)}
    if kind == SyntheticKind.INTERACTIONS:
        upper: np.ndarray = np.triu(rng.uniform(0.0, 1.0, size=(d, d)), k=1)
        return {"W": upper + upper.T}
    if kind == SyntheticKind.QUADRATIC:
        A: np.ndarray = rng.standard_normal(size=(d, d))
        return {"Q": A.T @ A}

    return dict()


def sample_features(spec: SyntheticSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Sample the feature matrix for every kind except Parabola."""

    X: np.ndarray = rng.uniform(0.0, 1.0, size=(n, spec.d))

    if spec.kind == SyntheticKind.SPARSE:
        X = X * (rng.uniform(0.0, 1.0, size=(n, spec.d)) < spec.sparsity)
    elif spec.kind in (SyntheticKind.FRIEDMAN2, SyntheticKind.FRIEDMAN3):
        X[:, 0] *= 100.0
        X[:, 1] = X[:, 1] * 520.0 * np.pi + 40.0 * np.pi
        X[:, 3] = X[:, 3] * 10.0 + 1.0

    return X


# Extra Nonlinear terms for features 6, 7, 8, ... (1-based), cycled in order
def _nonlinear_extra(X: np.ndarray, j: int) -> np.ndarray:
    form: int = (j - 6) % 3
    if form == 0:
        return np.sin(X[:, j - 1]) * np.sqrt(np.abs(X[:, j - 2]) + 1.0)
    if form == 1:
        return np.log(np.abs(X[:, j - 1]) + 1.0) * np.tanh(X[:, j - 3])
    return X[:, j - 1] ** 2 * np.cos(X[:, j - 4])


def gen_response(
    kind: "SyntheticKind | str",
    X: np.ndarray,
    params: Optional[SyntheticSpec] = None,
    rng: Optional[np.random.Generator] = None,
    coefs: Optional[Dict[str, Any]] = None,
) -> np.ndarray:
    """Evaluate the kind's response y for each row of X, drawing missing coefficients from rng."""

    kind = SyntheticKind.parse(kind)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    d: int = X.shape[1]

    if kind == SyntheticKind.PARABOLA and d != 1:
        raise ValidationError(f"Parabola takes exactly 1 feature, got {d}")
    if d < min_features[kind]:
        raise ValidationError(f"{kind.value} needs at least {min_features[kind]} features, got {d}")

    if coefs is None:
        coefs = draw_coefficients(
            kind, d, rng if rng is not None else np.random.default_rng(params.seed if params else 0)
        )

    if kind == SyntheticKind.FRIEDMAN1:
        x1, x2, x3, x4, x5 = (X[:, j] for j in range(5))
        return (
            10.0 * np.sin(np.pi * x1 * x2) + 20.0 * (x3 - 0.5) ** 2 + 10.0 * x4 + 5.0 * x5
        )

    if kind in (SyntheticKind.FRIEDMAN2, SyntheticKind.FRIEDMAN3):
        x1, x2, x3, x4 = (X[:, j] for j in range(4))
        with np.errstate(divide="ignore", invalid="ignore"):
            inner: np.ndarray = x2 * x3 - 1.0 / (x2 * x4)
            if kind == SyntheticKind.FRIEDMAN2:
                return np.sqrt(x1**2 + inner**2)
            return np.arctan(inner / x1)

    if kind == SyntheticKind.INTERACTIONS:
        W: np.ndarray = _checked(coefs, "W", (d, d))
        return 0.5 * np.einsum("ni,ij,nj->n", X, W, X)

    if kind == SyntheticKind.QUADRATIC:
        Q: np.ndarray = _checked(coefs, "Q", (d, d))
        return np.einsum("ni,ij,nj->n", X, Q, X)

    if kind == SyntheticKind.NONLINEAR:
        y: np.ndarray = (
            4.0 * np.sin(X[:, 0])
            + np.log(np.abs(X[:, 1]) + 1.0)
            + X[:, 2] ** 2
            + np.exp(0.5 * X[:, 3])
            + np.tanh(X[:, 4])
        )
        for j in range(6, d + 1):
            y = y + _nonlinear_extra(X, j)
        return y

    if kind == SyntheticKind.PARABOLA:
        x0: float = float(coefs.get("x0", params.x0 if params else 0.0))
        return (X[:, 0] - x0) ** 2

    # Linear, Noisy, Sparse
    w: np.ndarray = _checked(coefs, "w", (d,))
    return X @ w


def _checked(coefs: Dict[str, Any], key: str, shape: Tuple[int, ...]) -> np.ndarray:
    value: np.ndarray = np.asarray(coefs[key], dtype=np.float64)
    if value.shape != shape:
        raise ValidationError(f"Coefficient '{key}' has shape {value.shape}, expected {shape}")
    return value


def weibull_event_time(y: Any, shape: float, u: Any) -> Any:
    """T = y / Γ(1 + 1/k) · (−log u)^(1/k). Scalars in, scalar out."""

    if shape <= 0:
        raise DomainError(f"Weibull shape must be positive, got {shape}")

    y_arr: np.ndarray = np.asarray(y, dtype=np.float64)
    u_arr: np.ndarray = np.asarray(u, dtype=np.float64)
    if np.any(u_arr <= 0.0) or np.any(u_arr >= 1.0):
        raise DomainError("u must lie strictly inside (0, 1)")
    if np.any(y_arr < 0.0):
        raise DomainError("y must be non-negative")

    T: np.ndarray = y_arr / gamma_fn(1.0 + 1.0 / shape) * (-np.log(u_arr)) ** (1.0 / shape)

    return float(T) if T.ndim == 0 else T


def _open_uniform(rng: np.random.Generator, n: int) -> np.ndarray:
    eps: float = np.finfo(np.float64).eps
    return np.clip(rng.uniform(0.0, 1.0, size=n), eps, 1.0 - eps)


def _bernoulli_events(rng: np.random.Generator, n: int, censor_prob: float) -> np.ndarray:
    """Pr{event = 0} = censor_prob."""

    return (rng.uniform(0.0, 1.0, size=n) >= censor_prob).astype(np.int64)


def make_dataset(spec: SyntheticSpec) -> Tuple[SurvivalDataset, SurvivalDataset]:
    """Generate (train, test) for a synthetic spec, reproducibly from its seed."""

    spec.validate()
    rng: np.random.Generator = np.random.default_rng(spec.seed)

    if spec.kind == SyntheticKind.PARABOLA:
        return _make_parabola(spec, rng)

    n: int = spec.n_train + spec.n_test
    coefs: Dict[str, Any] = draw_coefficients(spec.kind, spec.d, rng)
    X: np.ndarray = sample_features(spec, n, rng)

    # Friedman3's arctan can dip just below zero
    y: np.ndarray = np.maximum(gen_response(spec.kind, X, spec, rng, coefs), 0.0)
    y = np.nan_to_num(y, nan=0.0, posinf=0.0)

    times: np.ndarray = weibull_event_time(y, float(spec.weibull_shape), _open_uniform(rng, n))
    events: np.ndarray = _bernoulli_events(rng, n, spec.censor_prob)

    names: Tuple[str, ...] = tuple(f"feature_{j}" for j in range(spec.d))
    train = SurvivalDataset(X[: spec.n_train], times[: spec.n_train], events[: spec.n_train], names)
    test = SurvivalDataset(X[spec.n_train :], times[spec.n_train :], events[spec.n_train :], names)

    return train, test


def _make_parabola(
    spec: SyntheticSpec, rng: np.random.Generator
) -> Tuple[SurvivalDataset, SurvivalDataset]:
    """200 + 10 + 200 points; the thin center gets alternating censoring indicators."""

    xs: List[np.ndarray] = list()
    events: List[np.ndarray] = list()
    for lo, hi, count in parabola_segments:
        if lo == -2.0:
            xs.append(np.linspace(lo, hi, count))
            events.append(np.arange(count, dtype=np.int64) % 2)
        else:
            xs.append(rng.uniform(lo, hi, size=count))
            events.append(_bernoulli_events(rng, count, spec.censor_prob))

    x_train: np.ndarray = np.concatenate(xs)
    e_train: np.ndarray = np.concatenate(events)

    x_test: np.ndarray = rng.uniform(-5.0, 5.0, size=spec.n_test)
    e_test: np.ndarray = _bernoulli_events(rng, spec.n_test, spec.censor_prob)

    coefs: Dict[str, Any] = {"x0": spec.x0}
    names: Tuple[str, ...] = ("feature_0",)
    train = SurvivalDataset(
        x_train.reshape(-1, 1),
        gen_response(SyntheticKind.PARABOLA, x_train.reshape(-1, 1), spec, rng, coefs),
        e_train,
        names,
    )
    test = SurvivalDataset(
        x_test.reshape(-1, 1),
        gen_response(SyntheticKind.PARABOLA, x_test.reshape(-1, 1), spec, rng, coefs),
        e_test,
        names,
    )

    return train, test


### END ###
