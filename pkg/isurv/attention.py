"""
ATTENTION WEIGHTS

Embedding, masked dot-product attention, Gaussian-kernel attention, and the
row softmax that turns logits into the row-stochastic mixing matrix W.
"""

import logging
import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import torch

from .errors import DomainError, ShapeError

logger = logging.getLogger(__name__)

dtype: torch.dtype = torch.float64

MaskMatrix = np.ndarray  # (N, N) bool, True = kept


### EMBEDDING ###


class Embedding(torch.nn.Module):
    """f_theta: one linear layer d0 -> d, a smooth nonlinearity, dropout on the output."""

    def __init__(
        self,
        d_in: int,
        d_out: int,
        dropout: float = 0.5,
        activation: str = "tanh",
        generator: Optional[torch.Generator] = None,
    ) -> None:
        super().__init__()
        if activation not in ("tanh", "identity"):
            raise DomainError(f"Unknown activation '{activation}'")

        bound: float = 1.0 / math.sqrt(d_in)
        self.weight = torch.nn.Parameter(
            (torch.rand(d_in, d_out, generator=generator, dtype=dtype) * 2.0 - 1.0) * bound
        )
        self.bias = torch.nn.Parameter(
            (torch.rand(d_out, generator=generator, dtype=dtype) * 2.0 - 1.0) * bound
        )
        self.dropout: float = dropout
        self.activation: str = activation

    @property
    def d_in(self) -> int:
        return int(self.weight.shape[0])

    @property
    def d_out(self) -> int:
        return int(self.weight.shape[1])


def embed(
    X: torch.Tensor,
    params: Embedding,
    training: bool = False,
    generator: Optional[torch.Generator] = None,
) -> torch.Tensor:
    """Map (N, d0) rows to (N, d). Dropout only when training, rescaled by 1/(1-p)."""

    if X.ndim != 2 or X.shape[1] != params.d_in:
        raise ShapeError(f"Expected (N, {params.d_in}) inputs, got {tuple(X.shape)}")

    H: torch.Tensor = X @ params.weight + params.bias
    if params.activation == "tanh":
        H = torch.tanh(H)

    p: float = params.dropout
    if training and p > 0.0:
        if p >= 1.0:
            return torch.zeros_like(H)
        keep: torch.Tensor = torch.rand(H.shape, generator=generator, dtype=dtype) >= p
        H = H * keep / (1.0 - p)

    return H


### DOT-PRODUCT ATTENTION ###


def init_projection(d: int, generator: Optional[torch.Generator] = None) -> torch.Tensor:
    """i.i.d. N(0, 1/d) entries."""
    return torch.randn(d, d, generator=generator, dtype=dtype) / math.sqrt(d)


def raw_attention(
    Q: torch.Tensor, K: torch.Tensor, W_Q: torch.Tensor, W_K: torch.Tensor
) -> torch.Tensor:
    """A = (Q W_Q)(K W_K)^T / sqrt(d)."""

    d: int = int(Q.shape[-1])
    if d == 0:
        raise DomainError("Attention needs a positive dimension")
    if K.shape[-1] != d or W_Q.shape != (d, d) or W_K.shape != (d, d):
        raise ShapeError(
            f"Incompatible shapes: Q {tuple(Q.shape)}, K {tuple(K.shape)}, "
            f"W_Q {tuple(W_Q.shape)}, W_K {tuple(W_K.shape)}"
        )

    return (Q @ W_Q) @ (K @ W_K).T / math.sqrt(d)


def make_mask(N: int, p_mask: float, rng: np.random.Generator) -> MaskMatrix:
    """Keep an off-diagonal entry iff its uniform draw exceeds p_mask; the diagonal is always masked."""

    if N < 2:
        raise DomainError(f"A mask needs N >= 2, got {N}")

    keep: np.ndarray = rng.uniform(0.0, 1.0, size=(N, N)) > p_mask
    np.fill_diagonal(keep, False)

    return keep


def row_softmax(A: torch.Tensor, M: Optional[MaskMatrix | torch.Tensor] = None) -> torch.Tensor:
    """Masked row softmax. A fully masked row falls back to uniform weights off the diagonal."""

    if M is None:
        return torch.softmax(A, dim=1)

    keep: torch.Tensor = (
        M.to(torch.bool) if isinstance(M, torch.Tensor) else torch.tensor(np.asarray(M), dtype=torch.bool)
    )
    if keep.shape != A.shape:
        raise ShapeError(f"Mask {tuple(keep.shape)} does not match logits {tuple(A.shape)}")

    dead: torch.Tensor = ~keep.any(dim=1)
    if bool(dead.any()):
        logger.warning(
            "%d attention row(s) fully masked; using uniform off-diagonal weights", int(dead.sum())
        )
        n_rows, n_cols = A.shape
        off_diagonal: torch.Tensor = ~torch.eye(n_rows, n_cols, dtype=torch.bool)
        keep = torch.where(dead[:, None], off_diagonal, keep)
        A = A.masked_fill(dead[:, None], 0.0)

    logits: torch.Tensor = A.masked_fill(~keep, float("-inf"))
    logits = logits - logits.max(dim=1, keepdim=True).values.detach()

    return torch.softmax(logits, dim=1)


### GAUSSIAN-KERNEL ATTENTION ###


def gaussian_attention(
    queries: torch.Tensor,
    keys: torch.Tensor,
    tau: float | torch.Tensor,
    M: Optional[MaskMatrix | torch.Tensor] = None,
) -> torch.Tensor:
    """Row softmax of -||q - k||^2 / tau."""

    tau_t: torch.Tensor = torch.as_tensor(tau, dtype=dtype)
    if bool(tau_t <= 0.0):
        raise DomainError(f"Temperature must be positive, got {float(tau_t)}")
    if queries.shape[-1] != keys.shape[-1]:
        raise ShapeError(
            f"Queries {tuple(queries.shape)} and keys {tuple(keys.shape)} differ in dimension"
        )

    sq_dist: torch.Tensor = ((queries[:, None, :] - keys[None, :, :]) ** 2).sum(dim=-1)

    return row_softmax(-sq_dist / tau_t, M)


### ATTENTION STATE ###


class DotProductAttention(torch.nn.Module):
    """Trainable state for iSurvM/Q/J: embedding theta plus W_Q and W_K."""

    def __init__(
        self,
        d_in: int,
        d: int,
        dropout: float = 0.5,
        activation: str = "tanh",
        generator: Optional[torch.Generator] = None,
    ) -> None:
        super().__init__()
        self.embedding = Embedding(d_in, d, dropout, activation, generator)
        self.W_Q = torch.nn.Parameter(init_projection(d, generator))
        self.W_K = torch.nn.Parameter(init_projection(d, generator))

    def weights(
        self,
        queries: torch.Tensor,
        keys: torch.Tensor,
        M: Optional[MaskMatrix | torch.Tensor] = None,
        training: bool = False,
        generator: Optional[torch.Generator] = None,
    ) -> torch.Tensor:
        Q: torch.Tensor = embed(queries, self.embedding, training, generator)
        K: torch.Tensor = embed(keys, self.embedding, training, generator)

        return row_softmax(raw_attention(Q, K, self.W_Q, self.W_K), M)

    def decayed(self) -> List[torch.nn.Parameter]:
        return list(self.parameters())

    def free(self) -> List[torch.nn.Parameter]:
        return []


class GaussianAttention(torch.nn.Module):
    """Trainable state for iSurvJ(G): tau = exp(log_tau) keeps the temperature positive."""

    def __init__(self, tau: float = 1.0) -> None:
        super().__init__()
        if tau <= 0.0:
            raise DomainError(f"Temperature must be positive, got {tau}")
        self.log_tau = torch.nn.Parameter(torch.tensor(math.log(tau), dtype=dtype))

    @property
    def tau(self) -> torch.Tensor:
        return torch.exp(self.log_tau)

    def weights(
        self,
        queries: torch.Tensor,
        keys: torch.Tensor,
        M: Optional[MaskMatrix | torch.Tensor] = None,
        training: bool = False,
        generator: Optional[torch.Generator] = None,
    ) -> torch.Tensor:
        return gaussian_attention(queries, keys, self.tau, M)

    def decayed(self) -> List[torch.nn.Parameter]:
        return []

    def free(self) -> List[torch.nn.Parameter]:
        return [self.log_tau]


### GRADIENTS ###


def value_and_grad(
    fn: Callable[[], torch.Tensor], params: Sequence[torch.Tensor]
) -> Tuple[float, List[torch.Tensor]]:
    """Evaluate a scalar loss and its reverse-mode gradients w.r.t. params (zeros if unused)."""

    value: torch.Tensor = fn()
    grads: Tuple[Optional[torch.Tensor], ...] = torch.autograd.grad(
        value, list(params), allow_unused=True
    )

    return float(value.detach()), [
        torch.zeros_like(p) if g is None else g for p, g in zip(params, grads)
    ]


### END ###
