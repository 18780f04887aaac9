"""
iSurvM / iSurvQ / iSurvJ / iSurvJ(G)

Losses, training, fine-tuning, and precise and interval-valued prediction.
Censored labels are interval-valued: they induce a credal set over the
intervals after the censoring time. iSurvM and iSurvQ sample from it and
average or take the worst generations; iSurvJ learns one distribution per
instance jointly with the attention weights.
"""

import logging
import math
from dataclasses import asdict, dataclass, replace
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch

from .attention import (
    DotProductAttention,
    GaussianAttention,
    MaskMatrix,
    dtype,
    make_mask,
    value_and_grad,
)
from .baselines import SurvivalCurve
from .data import FeaturePreprocessor, SurvivalDataset
from .errors import DomainError, ShapeError, SizeError, TrainingError, ValidationError
from .grid import (
    ImpreciseLabel,
    TimeGrid,
    admissible_support,
    label_arrays,
    representable_mask,
    sample_credal_batch,
)

logger = logging.getLogger(__name__)

log_floor: float = 1e-12


### CONFIGURATION ###


class Variant(str, Enum):
    M = "iSurvM"
    Q = "iSurvQ"
    J = "iSurvJ"
    JG = "iSurvJ(G)"

    @classmethod
    def parse(cls, name: "str | Variant") -> "Variant":
        if isinstance(name, Variant):
            return name

        key: str = str(name).strip().lower().replace("(", "").replace(")", "")
        aliases: Dict[str, Variant] = {
            "m": cls.M,
            "isurvm": cls.M,
            "q": cls.Q,
            "isurvq": cls.Q,
            "j": cls.J,
            "isurvj": cls.J,
            "jg": cls.JG,
            "isurvjg": cls.JG,
        }
        if key not in aliases:
            raise DomainError(f"Unknown model variant '{name}'")

        return aliases[key]

    @property
    def joint(self) -> bool:
        """True when per-instance distributions are learned jointly with attention."""
        return self in (Variant.J, Variant.JG)

    @property
    def slug(self) -> str:
        return "isurv" + self.name.lower()


@dataclass
class ModelConfig:
    variant: Variant = Variant.J
    epochs: int = 300
    lr: float = 1e-2
    gamma: float = 0.1
    r: float = 0.5
    M: int = 20
    k: int = 5
    p_mask: float = 0.5
    embed_dim: int = 64
    dropout: float = 0.5
    batch_rate: float = 0.2
    weight_decay: float = 2e-3
    seed: int = 0
    fine_tune_epochs: int = 100
    tau: float = 1.0
    activation: str = "tanh"

    def __post_init__(self) -> None:
        self.variant = Variant.parse(self.variant)

    def validate(self) -> None:
        checks: List[Tuple[bool, str]] = [
            (self.epochs >= 0, f"epochs must be >= 0, got {self.epochs}"),
            (self.lr > 0.0, f"learning rate must be positive, got {self.lr}"),
            (self.gamma >= 0.0, f"gamma must be >= 0, got {self.gamma}"),
            (0.0 < self.r <= 1.0, f"r must be in (0, 1], got {self.r}"),
            (self.M >= 1, f"M must be >= 1, got {self.M}"),
            (self.k >= 0, f"k must be >= 0, got {self.k}"),
            (0.0 <= self.p_mask <= 1.0, f"p_mask must be in [0, 1], got {self.p_mask}"),
            (self.embed_dim >= 1, f"embedding dimension must be >= 1, got {self.embed_dim}"),
            (0.0 <= self.dropout <= 1.0, f"dropout must be in [0, 1], got {self.dropout}"),
            (0.0 < self.batch_rate <= 1.0, f"batch_rate must be in (0, 1], got {self.batch_rate}"),
            (self.weight_decay >= 0.0, f"weight decay must be >= 0, got {self.weight_decay}"),
            (self.fine_tune_epochs >= 0, f"fine_tune_epochs must be >= 0, got {self.fine_tune_epochs}"),
            (self.tau > 0.0, f"tau must be positive, got {self.tau}"),
            (self.activation in ("tanh", "identity"), f"unknown activation '{self.activation}'"),
        ]
        for ok, message in checks:
            if not ok:
                raise DomainError(message)

    def to_dict(self) -> Dict[str, Any]:
        d: Dict[str, Any] = asdict(self)
        d["variant"] = self.variant.value

        return d


### LOSSES ###


def target_mask(c: np.ndarray, censored: np.ndarray, T: int, k: int) -> np.ndarray:
    """
    (N, T) boolean mass region per instance.

    Events: the 2k+1 intervals centered at c, clipped to 1..T.
    Censored: the tail c+1..T.
    """

    j: np.ndarray = np.arange(1, T + 1)[None, :]
    cc: np.ndarray = np.asarray(c)[:, None]
    window: np.ndarray = (j >= np.maximum(1, cc - k)) & (j <= np.minimum(T, cc + k))

    return np.where(np.asarray(censored)[:, None], j > cc, window)


def _likelihood(P: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    mass: torch.Tensor = (P * target).sum(dim=-1)

    return -torch.log(mass.clamp_min(log_floor))


def _neg_entropy(pi: torch.Tensor) -> torch.Tensor:
    """Per-row sum of pi log pi."""
    return (pi * torch.log(pi.clamp_min(log_floor))).sum(dim=-1)


def _as_tensor(x: Any) -> torch.Tensor:
    """Float64 tensor; arrays are copied, so read-only inputs are fine."""
    if isinstance(x, torch.Tensor):
        return x.to(dtype)
    return torch.tensor(np.asarray(x), dtype=dtype)


def instance_losses(
    P: torch.Tensor | np.ndarray, labels: Sequence[ImpreciseLabel], k: int
) -> torch.Tensor:
    """Per-instance negative log window/tail mass; P is (..., N, T)."""

    P = _as_tensor(P)
    c, censored = label_arrays(labels)
    if P.shape[-2] != c.size:
        raise ShapeError(f"{P.shape[-2]} distributions for {c.size} labels")

    target: torch.Tensor = torch.as_tensor(target_mask(c, censored, int(P.shape[-1]), k))

    return _likelihood(P, target)


def instance_loss(p: torch.Tensor | np.ndarray, label: ImpreciseLabel, k: int) -> float:
    p = _as_tensor(p).reshape(1, -1)

    return float(instance_losses(p, [label], k)[0])


def mix_probabilities(W: torch.Tensor | np.ndarray, S: torch.Tensor | np.ndarray) -> torch.Tensor:
    """P = W S. S may carry a leading generation axis (M, N, T)."""

    W = _as_tensor(W)
    S = _as_tensor(S)
    if W.ndim != 2 or S.ndim not in (2, 3) or W.shape[1] != S.shape[-2]:
        raise ShapeError(f"Cannot mix weights {tuple(W.shape)} with distributions {tuple(S.shape)}")

    return W @ S


def generation_totals(
    P: torch.Tensor | np.ndarray, labels: Sequence[ImpreciseLabel], k: int
) -> torch.Tensor:
    """L(p^(m)) for each generation m of an (M, N, T) tensor."""
    return instance_losses(P, labels, k).sum(dim=-1)


def loss_isurvm(P: torch.Tensor | np.ndarray, labels: Sequence[ImpreciseLabel], k: int) -> torch.Tensor:
    return generation_totals(P, labels, k).sum()


def n_worst(r: float, M: int) -> int:
    """ceil(r M), guarded against float noise such as 0.3 * 10."""
    return min(M, max(1, math.ceil(r * M - 1e-9)))


def loss_isurvq(totals: torch.Tensor | np.ndarray, r: float) -> torch.Tensor:
    """Sum of the ceil(rM) largest per-generation totals."""

    totals = _as_tensor(totals).reshape(-1)
    if not 0.0 < r <= 1.0:
        raise DomainError(f"r must be in (0, 1], got {r}")

    return torch.topk(totals, n_worst(r, int(totals.shape[0]))).values.sum()


def loss_isurvj(
    P: torch.Tensor | np.ndarray,
    labels: Sequence[ImpreciseLabel],
    pi: torch.Tensor | np.ndarray,
    gamma: float,
    k: int,
) -> torch.Tensor:
    """Summed instance loss plus -gamma * sum(pi log pi) per instance."""

    pi = _as_tensor(pi)

    return instance_losses(P, labels, k).sum() - gamma * _neg_entropy(pi).sum()


def support_softmax(logits: torch.Tensor, support: torch.Tensor) -> torch.Tensor:
    """Softmax over each row's admissible intervals; exact zeros elsewhere."""
    return torch.softmax(logits.masked_fill(~support, float("-inf")), dim=-1)


### MODEL ###


def build_attention(
    config: ModelConfig, d_in: int, generator: Optional[torch.Generator] = None
) -> torch.nn.Module:
    if config.variant is Variant.JG:
        return GaussianAttention(config.tau)

    return DotProductAttention(d_in, config.embed_dim, config.dropout, config.activation, generator)


@dataclass(frozen=True)
class TrainedModel:
    """Immutable output of train / fine_tune."""

    config: ModelConfig
    grid: TimeGrid
    state: Dict[str, np.ndarray]
    features: np.ndarray  # (N, d0) training keys
    c: np.ndarray
    censored: np.ndarray
    pi_hat: np.ndarray  # (N, T)
    mask: MaskMatrix
    history: Tuple[float, ...] = ()
    sample_mean: Optional[np.ndarray] = None
    fine_tune_history: Tuple[float, ...] = ()
    dropped: int = 0
    preprocessor: Optional[FeaturePreprocessor] = None  # maps raw feature columns to `features` space

    def __post_init__(self) -> None:
        if self.pi_hat.shape != (self.features.shape[0], self.grid.T):
            raise ShapeError(
                f"pi_hat {self.pi_hat.shape} does not match {self.features.shape[0]} instances x {self.grid.T} intervals"
            )
        for a in (self.features, self.c, self.censored, self.pi_hat, self.mask):
            a.setflags(write=False)

    @property
    def N(self) -> int:
        return int(self.features.shape[0])

    @property
    def d(self) -> int:
        return int(self.features.shape[1])

    @property
    def labels(self) -> List[ImpreciseLabel]:
        return [ImpreciseLabel(int(ci), bool(ce)) for ci, ce in zip(self.c, self.censored)]

    @property
    def initial_loss(self) -> float:
        return self.history[0] if self.history else float("nan")

    @property
    def final_loss(self) -> float:
        return self.history[-1] if self.history else float("nan")

    def attention(self) -> torch.nn.Module:
        """Rebuild the attention module from the stored parameters."""

        module: torch.nn.Module = build_attention(self.config, self.d)
        module.load_state_dict({k: torch.tensor(v, dtype=dtype) for k, v in self.state.items()})
        module.eval()

        return module


def _snapshot(module: torch.nn.Module) -> Dict[str, np.ndarray]:
    return {k: v.detach().cpu().numpy().copy() for k, v in module.state_dict().items()}


### TRAINING ###


class _Problem:
    """Tensors shared by the training and fine-tuning objectives."""

    def __init__(
        self, X: np.ndarray, c: np.ndarray, censored: np.ndarray, T: int, k: int, mask: MaskMatrix
    ) -> None:
        self.X: torch.Tensor = torch.tensor(X, dtype=dtype)
        self.N: int = int(c.size)
        self.T: int = T
        self.support: torch.Tensor = torch.as_tensor(admissible_support(c, censored, T))
        self.target: torch.Tensor = torch.as_tensor(target_mask(c, censored, T, k))
        self.mask: Optional[torch.Tensor] = torch.tensor(mask, dtype=torch.bool) if self.N >= 2 else None

    def weights(
        self,
        attention: torch.nn.Module,
        rows: np.ndarray,
        training: bool = False,
        generator: Optional[torch.Generator] = None,
    ) -> torch.Tensor:
        M: Optional[torch.Tensor] = None if self.mask is None else self.mask[rows]

        return attention.weights(self.X[rows], self.X, M, training, generator)


def _objective(
    config: ModelConfig,
    problem: _Problem,
    W: torch.Tensor,
    rows: np.ndarray,
    S: Optional[torch.Tensor],
    logits: Optional[torch.Tensor],
) -> torch.Tensor:
    target: torch.Tensor = problem.target[rows]

    if config.variant.joint:
        pi: torch.Tensor = support_softmax(logits, problem.support)
        P: torch.Tensor = W @ pi
        return _likelihood(P, target).sum() - config.gamma * _neg_entropy(pi[rows]).sum()

    totals: torch.Tensor = _likelihood(W @ S, target).sum(dim=-1)
    if config.variant is Variant.Q:
        return loss_isurvq(totals, config.r)

    return totals.sum()


def train(
    dataset: SurvivalDataset,
    grid: TimeGrid,
    labels: Sequence[ImpreciseLabel],
    config: ModelConfig,
) -> TrainedModel:
    """
    Fit one of the four variants.

    Censored labels in the last interval are dropped (logged). Each epoch
    draws a batch of query rows without replacement; keys always span the
    full training set under the fixed self-attention mask. iSurvM/Q then
    run fine_tune from the last epoch's sample mean.
    """

    config.validate()
    if len(labels) != dataset.n:
        raise ShapeError(f"{len(labels)} labels for {dataset.n} instances")

    keep: np.ndarray = representable_mask(labels, grid.T)
    if not keep.any():
        raise SizeError("No representable training instances")

    kept: List[ImpreciseLabel] = [l for l, ok in zip(labels, keep) if ok]
    c, censored = label_arrays(kept)
    X: np.ndarray = dataset.features[keep]
    N: int = int(c.size)
    T: int = grid.T
    variant: Variant = config.variant

    if N < 2 and (config.epochs > 0 or not variant.joint):
        raise SizeError(f"Training needs at least 2 representable instances, got {N}")

    rng: np.random.Generator = np.random.default_rng(config.seed)
    generator: torch.Generator = torch.Generator().manual_seed(config.seed)

    attention: torch.nn.Module = build_attention(config, X.shape[1], generator)
    mask: MaskMatrix = make_mask(N, config.p_mask, rng) if N >= 2 else np.zeros((1, 1), dtype=bool)
    problem: _Problem = _Problem(X, c, censored, T, config.k, mask)

    logits: Optional[torch.nn.Parameter] = (
        torch.nn.Parameter(torch.zeros(N, T, dtype=dtype)) if variant.joint else None
    )
    free: List[torch.Tensor] = list(attention.free()) + ([logits] if logits is not None else [])
    decayed: List[torch.Tensor] = list(attention.decayed())
    params: List[torch.Tensor] = decayed + free

    groups: List[Dict[str, Any]] = [
        g
        for g in (
            {"params": decayed, "weight_decay": config.weight_decay},
            {"params": free, "weight_decay": 0.0},
        )
        if g["params"]
    ]
    optimizer: torch.optim.Optimizer = torch.optim.AdamW(groups, lr=config.lr)

    all_rows: np.ndarray = np.arange(N)
    n_batch: int = max(1, math.ceil(config.batch_rate * N - 1e-9))

    # NOTE - For iSurvM/Q the recorded losses are batch training losses;
    # a full-data evaluation would cost M times a joint step.
    def full_loss() -> float:
        with torch.no_grad():
            W: torch.Tensor = problem.weights(attention, all_rows)
            return float(_objective(config, problem, W, all_rows, None, logits))

    history: List[float] = [full_loss()] if variant.joint else []
    S: Optional[torch.Tensor] = None

    for epoch in range(config.epochs):
        rows: np.ndarray = np.sort(rng.choice(N, size=n_batch, replace=False))
        if not variant.joint:
            S = torch.as_tensor(sample_credal_batch(c, censored, T, config.M, rng), dtype=dtype)

        def step_loss() -> torch.Tensor:
            W: torch.Tensor = problem.weights(attention, rows, training=True, generator=generator)
            return _objective(config, problem, W, rows, S, logits)

        value, grads = value_and_grad(step_loss, params)
        if not math.isfinite(value):
            raise TrainingError(f"{variant.value}: non-finite loss {value} at epoch {epoch + 1}")

        for p, g in zip(params, grads):
            p.grad = g
        optimizer.step()

        recorded: float = full_loss() if variant.joint else value
        history.append(recorded)
        logger.debug("%s epoch %d/%d loss %.6f", variant.value, epoch + 1, config.epochs, recorded)

    if variant.joint:
        with torch.no_grad():
            pi_hat: np.ndarray = support_softmax(logits, problem.support).numpy().copy()
        sample_mean: Optional[np.ndarray] = None
    else:
        if S is None:
            S = torch.as_tensor(sample_credal_batch(c, censored, T, config.M, rng), dtype=dtype)
        sample_mean = S.mean(dim=0).numpy().copy()
        pi_hat = sample_mean

    model: TrainedModel = TrainedModel(
        config=replace(config),
        grid=grid,
        state=_snapshot(attention),
        features=np.array(X),
        c=c,
        censored=censored,
        pi_hat=pi_hat,
        mask=mask,
        history=tuple(history),
        sample_mean=sample_mean,
        dropped=int((~keep).sum()),
    )

    if not variant.joint:
        model = fine_tune(model, kept, config.gamma, config.k)

    logger.info(
        "Trained %s on %d instances, %d intervals, %d epochs",
        variant.value,
        N,
        T,
        config.epochs,
    )

    return model


def fine_tune(
    model: TrainedModel, labels: Sequence[ImpreciseLabel], gamma: float, k: int
) -> TrainedModel:
    """
    Optimize per-instance distributions with attention frozen.

    Starts from the sample mean, so the initial softmax reproduces it.
    The lowest-loss distributions seen are kept.
    """

    if model.sample_mean is None:
        raise ValidationError("fine_tune applies to models trained by iSurvM or iSurvQ")

    c, censored = label_arrays(labels)
    if not (np.array_equal(c, model.c) and np.array_equal(censored, model.censored)):
        raise ShapeError("Labels do not match the model's training instances")

    config: ModelConfig = model.config
    problem: _Problem = _Problem(model.features, c, censored, model.grid.T, k, model.mask)
    all_rows: np.ndarray = np.arange(model.N)

    with torch.no_grad():
        W: torch.Tensor = problem.weights(model.attention(), all_rows)

    start: torch.Tensor = torch.log(torch.tensor(model.sample_mean, dtype=dtype).clamp_min(log_floor))
    logits: torch.nn.Parameter = torch.nn.Parameter(start.masked_fill(~problem.support, 0.0))
    optimizer: torch.optim.Optimizer = torch.optim.Adam([logits], lr=config.lr)

    def objective() -> torch.Tensor:
        pi: torch.Tensor = support_softmax(logits, problem.support)
        return _likelihood(W @ pi, problem.target).sum() - gamma * _neg_entropy(pi).sum()

    with torch.no_grad():
        best_loss: float = float(objective())
        best_pi: np.ndarray = support_softmax(logits, problem.support).numpy().copy()
    trace: List[float] = [best_loss]

    for _ in range(config.fine_tune_epochs):
        value, grads = value_and_grad(objective, [logits])
        if not math.isfinite(value):
            raise TrainingError(f"Fine-tuning: non-finite loss {value}")
        logits.grad = grads[0]
        optimizer.step()

        with torch.no_grad():
            current: float = float(objective())
            if current < best_loss:
                best_loss = current
                best_pi = support_softmax(logits, problem.support).numpy().copy()
        trace.append(best_loss)

    logger.debug("Fine-tuning loss %.6f -> %.6f", trace[0], best_loss)

    return replace(model, pi_hat=best_pi, fine_tune_history=tuple(trace))


### PREDICTION ###


def _queries(model: TrainedModel, X0: np.ndarray) -> np.ndarray:
    X0 = np.atleast_2d(np.asarray(X0, dtype=np.float64))
    if X0.shape[1] != model.d:
        raise ShapeError(f"Query has {X0.shape[1]} features, model expects {model.d}")

    return X0


def attention_weights(model: TrainedModel, X0: np.ndarray) -> np.ndarray:
    """Inference weights a_{0,i}: no mask, no dropout. Shape (n, N)."""

    X0 = _queries(model, X0)
    with torch.no_grad():
        W: torch.Tensor = model.attention().weights(
            torch.tensor(X0, dtype=dtype), torch.tensor(model.features, dtype=dtype)
        )

    return W.numpy()


def predict_distributions(model: TrainedModel, X0: np.ndarray) -> np.ndarray:
    return attention_weights(model, X0) @ model.pi_hat


def predict_distribution(model: TrainedModel, x0: np.ndarray) -> np.ndarray:
    """p(x0) = sum_i a_{0,i} pi_hat_i."""
    return predict_distributions(model, np.asarray(x0).reshape(1, -1))[0]


def survival_values(p: np.ndarray) -> np.ndarray:
    """S at t_0..t_T: 1, then the tail mass beyond each interval, ending at 0."""

    p = np.asarray(p, dtype=np.float64).ravel()
    tail: np.ndarray = np.cumsum(p[::-1])[::-1]
    S: np.ndarray = np.concatenate([[1.0], tail[1:], [0.0]])

    return np.minimum.accumulate(np.clip(S, 0.0, 1.0))


def curve_from_distribution(grid: TimeGrid, p: np.ndarray) -> SurvivalCurve:
    return SurvivalCurve(grid.edges, survival_values(p)[: grid.T])


def predict_survival(model: TrainedModel, x0: np.ndarray) -> SurvivalCurve:
    return curve_from_distribution(model.grid, predict_distribution(model, x0))


def predict_survival_curves(model: TrainedModel, X0: np.ndarray) -> List[SurvivalCurve]:
    return [curve_from_distribution(model.grid, p) for p in predict_distributions(model, X0)]


def representative_times(grid: TimeGrid) -> np.ndarray:
    """Interval midpoints; the unbounded last interval is represented by t_{T-1}."""

    edges: np.ndarray = grid.edges

    return np.concatenate([(edges[:-1] + edges[1:]) / 2.0, [edges[-1]]])


def expected_times(model: TrainedModel, X0: np.ndarray) -> np.ndarray:
    return predict_distributions(model, X0) @ representative_times(model.grid)


def expected_time(model: TrainedModel, x0: np.ndarray) -> float:
    return float(predict_distribution(model, x0) @ representative_times(model.grid))


### INTERVAL-VALUED PREDICTION ###


def interval_probabilities(
    weights: np.ndarray, labels: Sequence[ImpreciseLabel], T: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Lower/upper probability of each interval over the neighbors' credal sets."""

    a: np.ndarray = np.asarray(weights, dtype=np.float64).ravel()
    c, censored = label_arrays(labels)
    if a.size != c.size:
        raise ShapeError(f"{a.size} weights for {c.size} labels")

    j: np.ndarray = np.arange(1, T + 1)[:, None]
    lower: np.ndarray = ((j == c[None, :]) & ~censored[None, :]) @ a
    upper: np.ndarray = lower + ((j > c[None, :]) & censored[None, :]) @ a

    return lower, upper


def predict_interval_survival(
    weights: np.ndarray, labels: Sequence[ImpreciseLabel], grid: TimeGrid
) -> Tuple[SurvivalCurve, SurvivalCurve]:
    """
    Envelopes of S over the credal set, at t_0..t_{T-1}.

    Upper: all censored weight survives past t_j. Lower: a censored neighbor
    survives t_j only if c >= j, since its mass starts at interval c+1.
    """

    a: np.ndarray = np.asarray(weights, dtype=np.float64).ravel()
    c, censored = label_arrays(labels)
    if a.size != c.size:
        raise ShapeError(f"{a.size} weights for {c.size} labels")

    j: np.ndarray = np.arange(grid.T)[:, None]
    events_after: np.ndarray = (~censored[None, :] & (c[None, :] > j)) @ a
    lower: np.ndarray = events_after + (censored[None, :] & (c[None, :] >= j)) @ a
    upper: np.ndarray = events_after + float(a[censored].sum())

    return SurvivalCurve(grid.edges, lower), SurvivalCurve(grid.edges, upper)


def model_interval_survival(model: TrainedModel, x0: np.ndarray) -> Tuple[SurvivalCurve, SurvivalCurve]:
    a: np.ndarray = attention_weights(model, np.asarray(x0).reshape(1, -1))[0]

    return predict_interval_survival(a, model.labels, model.grid)


### END ###
