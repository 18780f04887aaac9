"""
EVALUATION METRICS

C-index, IPCW Brier score and its integral, Kolmogorov-Smirnov distance
between survival curves, and the unconditional (population) curve.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid

from .baselines import SurvivalCurve, kaplan_meier
from .data import SurvivalDataset
from .errors import ShapeError, SizeError, UndefinedMetricError
from .grid import TimeGrid

logger = logging.getLogger(__name__)


### REPORT ###


@dataclass
class EvaluationReport:
    model: str
    dataset: str
    seed: int
    c_index: float
    ibs: float
    brier_times: List[float] = field(default_factory=list)
    brier_values: List[float] = field(default_factory=list)
    n_pairs: int = 0
    n_tied: int = 0
    runtime: Optional[float] = None
    config_hash: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        d: Dict[str, Any] = asdict(self)
        if self.runtime is None:
            del d["runtime"]
        if self.config_hash is None:
            del d["config_hash"]

        return d


### RANKING ###


def concordance(
    pred_times: np.ndarray, times: np.ndarray, events: np.ndarray
) -> Tuple[float, int, int]:
    """(C-index, admissible pairs, pairs tied in prediction). Ties score 1/2."""

    pred: np.ndarray = np.asarray(pred_times, dtype=np.float64).ravel()
    t: np.ndarray = np.asarray(times, dtype=np.float64).ravel()
    e: np.ndarray = np.asarray(events).ravel().astype(bool)
    if not (pred.size == t.size == e.size):
        raise ShapeError("Predictions, times and events differ in length")

    admissible: np.ndarray = e[:, None] & (t[:, None] < t[None, :])
    n_pairs: int = int(admissible.sum())
    if n_pairs == 0:
        raise UndefinedMetricError("No admissible pairs: the C-index is undefined")

    concordant: int = int((admissible & (pred[:, None] < pred[None, :])).sum())
    tied: int = int((admissible & (pred[:, None] == pred[None, :])).sum())

    return (concordant + 0.5 * tied) / n_pairs, n_pairs, tied


def c_index(pred_times: np.ndarray, times: np.ndarray, events: np.ndarray) -> float:
    return concordance(pred_times, times, events)[0]


### BRIER ###


def censoring_curve(times: np.ndarray, events: np.ndarray) -> SurvivalCurve:
    """Kaplan-Meier of the censoring distribution (flipped indicators)."""
    return kaplan_meier(times, 1 - np.asarray(events))


def brier_score(
    t: float,
    surv_at_t: np.ndarray,
    times: np.ndarray,
    events: np.ndarray,
    censor_km: SurvivalCurve,
) -> float:
    """
    IPCW Brier score at t.

    Events at or before t weigh S^2 / G(T_i-); subjects still at risk weigh
    (1 - S)^2 / G(t); subjects censored before t contribute 0. Instances
    whose weight would divide by G = 0 are left out.
    """

    S: np.ndarray = np.asarray(surv_at_t, dtype=np.float64).ravel()
    T_obs: np.ndarray = np.asarray(times, dtype=np.float64).ravel()
    e: np.ndarray = np.asarray(events).ravel().astype(bool)
    if not (S.size == T_obs.size == e.size):
        raise ShapeError("Predictions, times and events differ in length")

    died: np.ndarray = e & (T_obs <= t)
    alive: np.ndarray = T_obs > t

    G_event: np.ndarray = censor_km.at(T_obs, left=True)
    G_t: float = float(censor_km.at(t))

    excluded: np.ndarray = (died & (G_event <= 0.0)) | (alive & (G_t <= 0.0))
    if excluded.any():
        logger.warning("Brier at t=%.6g: %d instance(s) with zero censoring weight excluded", t, int(excluded.sum()))

    with np.errstate(divide="ignore", invalid="ignore"):
        terms: np.ndarray = np.where(died, S**2 / G_event, 0.0) + np.where(alive, (1.0 - S) ** 2 / G_t, 0.0)

    used: np.ndarray = ~excluded
    if not used.any():
        raise UndefinedMetricError(f"Brier score at t={t}: every instance has zero censoring weight")

    return float(np.mean(terms[used]))


def brier_curve(
    curves: Sequence[SurvivalCurve], test: SurvivalDataset, points: np.ndarray
) -> np.ndarray:
    if len(curves) != test.n:
        raise ShapeError(f"{len(curves)} curves for {test.n} test instances")

    G: SurvivalCurve = censoring_curve(test.times, test.events)

    return np.array(
        [brier_score(t, np.array([s.at(t) for s in curves]), test.times, test.events, G) for t in points]
    )


def brier_profile(
    curves: Sequence[SurvivalCurve],
    test: SurvivalDataset,
    grid: TimeGrid,
    t_max: Optional[float] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Grid boundaries up to t_max (default: largest test time) and the Brier score at each."""

    horizon: float = float(test.times.max() if t_max is None else t_max)
    points: np.ndarray = grid.boundaries[grid.boundaries <= horizon]
    if points.size == 0:
        raise SizeError(f"No grid boundary at or before t_max={horizon}")

    return points, brier_curve(curves, test, points)


def average_brier(points: np.ndarray, values: np.ndarray) -> float:
    """Trapezoidal average; a single point is its own average."""

    if points.size == 1:
        return float(values[0])

    return float(trapezoid(values, points) / (points[-1] - points[0]))


def integrated_brier(
    curves: Sequence[SurvivalCurve],
    test: SurvivalDataset,
    grid: TimeGrid,
    t_max: Optional[float] = None,
) -> float:
    return average_brier(*brier_profile(curves, test, grid, t_max))


### CURVES ###


def _union_times(curves: Sequence[SurvivalCurve]) -> np.ndarray:
    return np.unique(np.concatenate([c.times for c in curves]))


def ks_distance(a: SurvivalCurve, b: SurvivalCurve) -> float:
    """sup |S_a - S_b| over the union of both step points."""

    u: np.ndarray = _union_times([a, b])

    return float(np.max(np.abs(a.at(u) - b.at(u))))


def unconditional_sf(curves: Sequence[SurvivalCurve]) -> SurvivalCurve:
    """Pointwise mean of conditional curves."""

    if len(curves) == 0:
        raise SizeError("Cannot average an empty set of curves")

    u: np.ndarray = _union_times(curves)
    values: np.ndarray = np.mean([c.at(u) for c in curves], axis=0)

    return SurvivalCurve(u, values)


### END ###
