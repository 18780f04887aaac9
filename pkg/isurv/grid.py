"""
TIME GRID & IMPRECISE LABELS

Partitions the time axis into T intervals, maps instances to intervals, and
samples distributions from the credal set a censored label induces.
"""

import logging
from dataclasses import dataclass
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np

from .errors import DomainError, SizeError, UnrepresentableLabelError

logger = logging.getLogger(__name__)


### TYPES ###


@dataclass(frozen=True)
class TimeGrid:
    """Boundaries 0 < t_1 < ... < t_{T-1}. Interval j (1-based) is [t_{j-1}, t_j], the last is [t_{T-1}, inf)."""

    boundaries: np.ndarray

    def __post_init__(self) -> None:
        b: np.ndarray = np.array(self.boundaries, dtype=np.float64).ravel()
        if b.size == 0:
            raise SizeError("A time grid needs at least one boundary")
        if b[0] <= 0.0 or np.any(np.diff(b) <= 0.0):
            raise DomainError("Grid boundaries must be positive and strictly increasing")
        b.setflags(write=False)
        object.__setattr__(self, "boundaries", b)

    @property
    def T(self) -> int:
        return int(self.boundaries.shape[0]) + 1

    @property
    def edges(self) -> np.ndarray:
        """t_0 = 0 followed by the boundaries."""
        return np.concatenate([[0.0], self.boundaries])


class ImpreciseLabel(NamedTuple):
    c: int  # 1-based interval index
    censored: bool


### GRID ###


def build_grid(times: Sequence[float] | np.ndarray, events: Sequence[int] | np.ndarray) -> TimeGrid:
    """Boundaries are the sorted unique positive observed times, censored and uncensored alike."""

    t: np.ndarray = np.asarray(times, dtype=np.float64).ravel()
    if t.size == 0:
        raise SizeError("Cannot build a grid from no observations")
    if np.asarray(events).ravel().size != t.size:
        raise SizeError("times and events differ in length")

    positive: np.ndarray = np.unique(t[t > 0.0])
    if positive.size == 0:
        raise SizeError("At least one observed time must be positive")

    return TimeGrid(positive)


def interval_index(grid: TimeGrid, time: float | np.ndarray) -> int | np.ndarray:
    """Smallest j with time <= t_j, or T past the last boundary."""

    t: np.ndarray = np.asarray(time, dtype=np.float64)
    if np.any(t < 0.0):
        raise DomainError("Times must be non-negative")

    j: np.ndarray = np.searchsorted(grid.boundaries, t, side="left") + 1

    return int(j) if j.ndim == 0 else j.astype(np.int64)


### LABELS ###


def make_labels(grid: TimeGrid, times: np.ndarray, events: np.ndarray) -> List[ImpreciseLabel]:
    c: np.ndarray = np.atleast_1d(interval_index(grid, np.asarray(times)))

    return [ImpreciseLabel(int(ci), not bool(e)) for ci, e in zip(c, np.asarray(events))]


def label_arrays(labels: Sequence[ImpreciseLabel]) -> Tuple[np.ndarray, np.ndarray]:
    """(c, censored) as arrays."""

    c: np.ndarray = np.array([l.c for l in labels], dtype=np.int64)
    censored: np.ndarray = np.array([l.censored for l in labels], dtype=bool)

    return c, censored


def is_representable(label: ImpreciseLabel, T: int) -> bool:
    return not (label.censored and label.c >= T)


def representable_mask(labels: Sequence[ImpreciseLabel], T: int) -> np.ndarray:
    """Rows to keep for training; censored-at-the-last-interval labels have an empty credal set."""

    keep: np.ndarray = np.array([is_representable(l, T) for l in labels], dtype=bool)
    dropped: int = int((~keep).sum())
    if dropped:
        logger.warning(
            "Dropped %d censored instance(s) in the last interval: no admissible interval follows", dropped
        )

    return keep


def label_bounds(label: ImpreciseLabel, T: int) -> Tuple[np.ndarray, np.ndarray]:
    """Componentwise lower/upper probabilities of the label's credal set."""

    if not 1 <= label.c <= T:
        raise DomainError(f"Interval index {label.c} outside 1..{T}")

    lower: np.ndarray = np.zeros(T)
    upper: np.ndarray = np.zeros(T)

    if not label.censored:
        lower[label.c - 1] = 1.0
        upper[label.c - 1] = 1.0
        return lower, upper

    if label.c >= T:
        raise UnrepresentableLabelError(
            f"Censored in interval {label.c} of {T}: there is no later interval"
        )
    upper[label.c :] = 1.0

    return lower, upper


def admissible_support(c: np.ndarray, censored: np.ndarray, T: int) -> np.ndarray:
    """(N, T) boolean: interval c for events, intervals c+1..T for censored rows."""

    j: np.ndarray = np.arange(1, T + 1)[None, :]
    cc: np.ndarray = np.asarray(c)[:, None]

    return np.where(np.asarray(censored)[:, None], j > cc, j == cc)


### SAMPLING ###


def sample_credal_batch(
    c: np.ndarray, censored: np.ndarray, T: int, M: int, rng: np.random.Generator
) -> np.ndarray:
    """
    Draw M distributions per instance, shape (M, N, T).

    Censored rows get a flat Dirichlet over intervals c+1..T, drawn as
    normalized standard exponentials; event rows are degenerate at c.
    """

    if M < 1:
        raise DomainError(f"Need at least one generation, got M={M}")

    support: np.ndarray = admissible_support(c, censored, T)
    if np.any(~support.any(axis=1)):
        raise UnrepresentableLabelError("A censored label has no admissible interval")

    N: int = support.shape[0]
    draws: np.ndarray = rng.standard_exponential(size=(M, N, T)) * support[None, :, :]
    totals: np.ndarray = draws.sum(axis=-1, keepdims=True)
    S: np.ndarray = draws / np.maximum(totals, np.finfo(np.float64).tiny)

    degenerate: np.ndarray = support.astype(np.float64)
    S = np.where(np.asarray(censored)[None, :, None], S, degenerate[None, :, :])

    return S


def sample_credal(label: ImpreciseLabel, T: int, M: int, rng: np.random.Generator) -> np.ndarray:
    """M rows sampled from one label's credal set, shape (M, T)."""

    label_bounds(label, T)

    S: np.ndarray = sample_credal_batch(
        np.array([label.c]), np.array([label.censored]), T, M, rng
    )

    return S[:, 0, :]


### END ###
