"""Task heads on top of the pooled node embeddings.

Q1  pattern classification: softmax over {Edge, Wedge, Triangle, Closure}.
Q2  time to first formation: per pattern a k-component log-normal mixture.
Q3  pattern discrimination: a linear score per walk, summed over the walk sets.
"""

from __future__ import annotations

import math

import torch
from torch import nn
from torch.nn import functional as F

from .encoder import make_activation

LOG_2PI = math.log(2.0 * math.pi)


def symmetric_input(psi: torch.Tensor) -> torch.Tensor:
    """``(psi_u + psi_v) ++ psi_w`` for ``psi`` of shape (B, 3, H)."""
    return torch.cat([psi[:, 0] + psi[:, 1], psi[:, 2]], -1)


class PatternClassifier(nn.Module):
    def __init__(self, hidden: int = 172, mlp_hidden: int = 172, activation: str = "silu", n_classes: int = 4):
        super().__init__()
        self.net = nn.Sequential(nn.Linear(2 * hidden, mlp_hidden), make_activation(activation),
                                 nn.Linear(mlp_hidden, n_classes))
        self.double()

    def forward(self, psi: torch.Tensor) -> torch.Tensor:
        """Class logits; ``softmax`` of these is the predicted distribution."""
        return self.net(symmetric_input(psi))


class MixtureParams(nn.Module):
    """Weights, means and variances of a k-component mixture on ``log t``."""

    def __init__(self, in_dim: int, k: int, mlp_hidden: int, activation: str):
        super().__init__()

        def head():
            return nn.Sequential(nn.Linear(in_dim, mlp_hidden), make_activation(activation),
                                 nn.Linear(mlp_hidden, k))

        self.w = head()
        self.mu = head()
        self.log_var = head()

    def forward(self, x):
        return F.log_softmax(self.w(x), -1), self.mu(x), self.log_var(x)


class TimeMixtureHead(nn.Module):
    """One mixture per timed pattern (Wedge, Triangle, Closure)."""

    def __init__(self, hidden: int = 172, k: int = 3, mlp_hidden: int = 172, activation: str = "silu",
                 n_patterns: int = 3):
        super().__init__()
        if k < 1:
            raise ValueError("k must be positive")
        self.k = k
        self.heads = nn.ModuleList(MixtureParams(2 * hidden, k, mlp_hidden, activation) for _ in range(n_patterns))
        self.double()

    def warm_start(self, log_times_by_pattern: list[torch.Tensor | None]) -> None:
        """Set output biases to the empirical mean/variance of ``log t`` per pattern."""
        with torch.no_grad():
            for head, lt in zip(self.heads, log_times_by_pattern):
                if lt is None or len(lt) == 0:
                    continue
                mu = lt.mean()
                var = lt.var(unbiased=False) if len(lt) > 1 else torch.tensor(1.0, dtype=lt.dtype)
                var = torch.clamp(var, min=1e-4)
                spread = torch.linspace(-0.5, 0.5, self.k, dtype=torch.float64) * var.sqrt() if self.k > 1 else 0.0
                head.mu[-1].bias.copy_(mu + spread)
                head.log_var[-1].bias.fill_(float(torch.log(var)))

    def forward(self, psi: torch.Tensor, pattern_index: torch.Tensor):
        """Mixture parameters for each row, picking the head given by ``pattern_index`` (0..2)."""
        x = symmetric_input(psi)
        outs = [h(x) for h in self.heads]
        idx = pattern_index.view(-1, 1, 1).expand(-1, 1, self.k)
        stack = [torch.stack([o[i] for o in outs], 1).gather(1, idx).squeeze(1) for i in range(3)]
        return tuple(stack)


def mixture_nll(log_w: torch.Tensor, mu: torch.Tensor, log_var: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
    """Per-row ``-log sum_i w_i N(log t; mu_i, sigma_i^2)``.

    The density is over ``log t`` (no ``1/t`` Jacobian).  Computed with
    log-sum-exp so extreme components neither overflow nor underflow.
    """
    if torch.any(t <= 0):
        raise ValueError("formation times must be positive")
    x = torch.log(t).unsqueeze(-1)
    comp = -0.5 * (LOG_2PI + log_var + (x - mu) ** 2 * torch.exp(-log_var))
    return -torch.logsumexp(log_w + comp, -1)


# keeps exp() finite and positive in float64
_LOG_T_RANGE = (-700.0, 700.0)


def point_estimate(log_w: torch.Tensor, mu: torch.Tensor) -> torch.Tensor:
    """``exp(sum_i w_i mu_i)``, clipped to the representable positive range."""
    return torch.exp(torch.clamp((log_w.exp() * mu).sum(-1), *_LOG_T_RANGE))


def mixture_log_density(log_w, mu, log_var, x):
    """Log density of the mixture at ``log t = x`` (broadcast over the last axis of ``x``)."""
    x = x.unsqueeze(-1)
    comp = -0.5 * (LOG_2PI + log_var.unsqueeze(-2) + (x - mu.unsqueeze(-2)) ** 2 * torch.exp(-log_var).unsqueeze(-2))
    return torch.logsumexp(log_w.unsqueeze(-2) + comp, -1)


class WalkScorer(nn.Module):
    """``x = sum_W B' Enc(W) + b`` over all walks of the three sets."""

    def __init__(self, hidden: int = 172):
        super().__init__()
        self.B = nn.Parameter(torch.empty(hidden, dtype=torch.float64).uniform_(-1 / math.sqrt(hidden),
                                                                               1 / math.sqrt(hidden)))
        self.b = nn.Parameter(torch.zeros((), dtype=torch.float64))

    def walk_scores(self, enc: torch.Tensor) -> torch.Tensor:
        """Per-walk contributions ``C_W``; ``enc`` is (..., H)."""
        return enc @ self.B

    def forward(self, enc: torch.Tensor) -> torch.Tensor:
        # enc: (B, 3, M, H)
        return self.walk_scores(enc).flatten(1).sum(-1) + self.b


def q3_loss(x: torch.Tensor, is_p1: torch.Tensor) -> torch.Tensor:
    """Per-row ``-log`` likelihood of the pair label: ``softplus(x) - x * 1[p1]``.

    Written as ``softplus(+-x)`` with ``softplus(z) = max(z, 0) + log1p(exp(-|z|))``,
    which stays accurate to rounding for any ``x``.
    """
    z = torch.where(is_p1, -x, x)
    return torch.clamp(z, min=0) + torch.log1p(torch.exp(-z.abs()))
