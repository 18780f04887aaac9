"""
BASELINE ESTIMATORS

Kaplan-Meier and Beran (kernel-weighted conditional Kaplan-Meier), plus the
step-function survival curve type every model in the package returns.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy.special import softmax

from .data import SurvivalDataset
from .errors import DomainError, ShapeError, SizeError, ValidationError

logger = logging.getLogger(__name__)

log_floor: float = 1e-12


### SURVIVAL CURVE ###


@dataclass(frozen=True)
class SurvivalCurve:
    """Right-continuous, non-increasing step function: S(t) = values[j] for times[j] <= t < times[j+1]."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        times: np.ndarray = np.array(self.times, dtype=np.float64).ravel()
        values: np.ndarray = np.array(self.values, dtype=np.float64).ravel()

        if times.shape != values.shape or times.size == 0:
            raise ShapeError(
                f"Curve needs matching non-empty times and values, got {times.shape} and {values.shape}"
            )
        if np.any(np.diff(times) <= 0.0):
            raise ValidationError("Curve times must be strictly increasing")

        tol: float = 1e-9
        if np.any(values < -tol) or np.any(values > 1.0 + tol):
            raise ValidationError("Survival values must lie in [0, 1]")
        if np.any(np.diff(values) > tol):
            raise ValidationError("Survival values must be non-increasing")
        values = np.minimum.accumulate(np.clip(values, 0.0, 1.0))

        times.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def at(self, t: float | np.ndarray, left: bool = False) -> np.ndarray:
        """Evaluate S(t), or the left limit S(t-) when left is set. S = 1 before the first time."""

        side: str = "left" if left else "right"
        idx: np.ndarray = np.searchsorted(self.times, np.asarray(t, dtype=np.float64), side=side) - 1

        return np.where(idx >= 0, self.values[np.clip(idx, 0, None)], 1.0)

    def chf(self) -> np.ndarray:
        """H = -log S, with S floored."""
        return -np.log(np.maximum(self.values, log_floor))

    def integral(self, t_max: Optional[float] = None) -> float:
        """Area under the step curve from 0 to t_max (default: the last time)."""

        end: float = float(self.times[-1] if t_max is None else t_max)
        edges: np.ndarray = np.concatenate([[0.0], self.times[self.times < end], [end]])
        heights: np.ndarray = self.at(edges[:-1])

        return float(np.sum(heights * np.diff(edges)))


def curve_from_steps(times: np.ndarray, values: np.ndarray) -> SurvivalCurve:
    """Prepend S(0) = 1 unless the first step is already at time 0."""

    if times.size and times[0] > 0.0:
        return SurvivalCurve(np.concatenate([[0.0], times]), np.concatenate([[1.0], values]))
    return SurvivalCurve(times, values)


### KAPLAN-MEIER ###


def kaplan_meier(times: np.ndarray, events: np.ndarray) -> SurvivalCurve:
    """Product-limit estimator over the unique observed times."""

    t: np.ndarray = np.asarray(times, dtype=np.float64).ravel()
    e: np.ndarray = np.asarray(events, dtype=np.float64).ravel()
    if t.size == 0:
        raise SizeError("Kaplan-Meier needs at least one observation")
    if t.size != e.size:
        raise ShapeError("times and events differ in length")

    uniq, inverse = np.unique(t, return_inverse=True)
    n_events: np.ndarray = np.bincount(inverse, weights=e, minlength=uniq.size)
    counts: np.ndarray = np.bincount(inverse, minlength=uniq.size)

    # Censored rows only leave the risk set after their time
    at_risk: np.ndarray = t.size - np.concatenate([[0], np.cumsum(counts)[:-1]])
    S: np.ndarray = np.cumprod(1.0 - n_events / at_risk)

    return curve_from_steps(uniq, S)


### BERAN ###


def kernel_weights(X: np.ndarray, x0: np.ndarray, tau: float) -> np.ndarray:
    """Normalized Gaussian weights exp(-||x0 - x_i||^2 / tau)."""

    if tau <= 0.0:
        raise DomainError(f"Bandwidth must be positive, got {tau}")

    X = np.asarray(X, dtype=np.float64)
    x0 = np.asarray(x0, dtype=np.float64).ravel()
    if X.shape[1] != x0.size:
        raise ShapeError(f"Query has {x0.size} features, training data has {X.shape[1]}")

    sq_dist: np.ndarray = np.sum((X - x0[None, :]) ** 2, axis=1)

    return softmax(-sq_dist / tau)


def weighted_kaplan_meier(
    times: np.ndarray, events: np.ndarray, weights: np.ndarray
) -> SurvivalCurve:
    """
    Product over events of (1 - w_i / remaining weight), steps at the unique times.

    Ties are processed one at a time: events before censorings at the same
    time, then ascending index. With uniform weights this is Kaplan-Meier.
    """

    t: np.ndarray = np.asarray(times, dtype=np.float64).ravel()
    e: np.ndarray = np.asarray(events).ravel().astype(bool)
    w: np.ndarray = np.asarray(weights, dtype=np.float64).ravel()
    if t.size == 0:
        raise SizeError("Beran needs at least one training observation")
    if not (t.size == e.size == w.size):
        raise ShapeError("times, events and weights differ in length")

    order: np.ndarray = np.lexsort((np.arange(t.size), ~e, t))
    ts, es, ws = t[order], e[order], w[order]

    # Remaining weight = 1 - sum of the weights processed before
    remaining: np.ndarray = np.cumsum(ws[::-1])[::-1]

    factor: np.ndarray = np.ones(t.size)
    with np.errstate(divide="ignore", invalid="ignore"):
        factor[es] = 1.0 - ws[es] / remaining[es]

    degenerate: np.ndarray = es & (remaining <= 0.0)
    if degenerate.any():
        logger.warning(
            "Beran: %d step(s) with non-positive remaining weight; survival clamped to 0 from %.6g on",
            int(degenerate.sum()),
            float(ts[degenerate][0]),
        )
        factor[degenerate] = 0.0
    factor = np.clip(np.nan_to_num(factor, nan=0.0), 0.0, 1.0)

    S: np.ndarray = np.cumprod(factor)

    uniq, first = np.unique(ts, return_index=True)
    last: np.ndarray = np.concatenate([first[1:], [ts.size]]) - 1

    return curve_from_steps(uniq, S[last])


def beran(train: SurvivalDataset, x0: np.ndarray, tau: float) -> SurvivalCurve:
    """Conditional survival curve S(t | x0)."""

    w: np.ndarray = kernel_weights(train.features, x0, tau)

    return weighted_kaplan_meier(train.times, train.events, w)


def beran_curves(train: SurvivalDataset, X: np.ndarray, tau: float) -> List[SurvivalCurve]:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))

    return [beran(train, x0, tau) for x0 in X]


### END ###
