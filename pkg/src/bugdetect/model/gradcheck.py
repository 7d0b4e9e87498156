"""Finite-difference checks of the detector and selector loss gradients."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import torch

from .batch import Batch
from .network import BugModel, detector_loss, selector_loss


@dataclass
class GradCheckResult:
    name: str
    analytic: float
    numeric: float
    grad_norm: float

    @property
    def rel_error(self) -> float:
        denom = max(abs(self.analytic), abs(self.numeric), 1e-12)
        return abs(self.analytic - self.numeric) / denom


def selector_objective(b: Batch, generator: torch.Generator) -> Callable[[BugModel], torch.Tensor]:
    """Selector loss with a random observed subset and chosen option per graph."""
    C = b.cand_offsets[-1]
    G = b.num_graphs
    observed = torch.zeros(C + G, dtype=torch.bool)
    chosen = torch.zeros(G, dtype=torch.int64)
    for g in range(G):
        opts = list(range(b.cand_offsets[g], b.cand_offsets[g + 1])) + [C + g]
        perm = torch.randperm(len(opts), generator=generator)[: max(1, len(opts) // 2)]
        pick = [opts[int(i)] for i in perm]
        for o in pick:
            observed[o] = True
        chosen[g] = pick[0]
    return lambda m: selector_loss(m(b), b, observed, chosen)


def detector_objective(b: Batch) -> Callable[[BugModel], torch.Tensor]:
    return lambda m: detector_loss(m(b), b)


def directional_check(
    model: BugModel,
    objective: Callable[[BugModel], torch.Tensor],
    steps: tuple[float, ...] = (1e-5, 1e-6, 1e-7),
    seed: int = 0,
) -> list[GradCheckResult]:
    """Compare g.v with a central difference along a direction v, one per
    parameter array. v mixes a random unit vector with the normalized analytic
    gradient, so g.v stays well away from zero while components orthogonal to
    g are still probed. Run the model in float64 and eval mode.

    Max aggregation is only piecewise smooth, so a central difference is valid
    only when no max switches inside the step. Each direction is evaluated at
    every step size and the estimate closest to the analytic value is kept; a
    wrong gradient disagrees at all of them.
    """
    gen = torch.Generator().manual_seed(seed)
    model.zero_grad()
    objective(model).backward()
    out = []
    for name, p in model.named_parameters():
        g = p.grad.detach().clone() if p.grad is not None else torch.zeros_like(p)
        v = torch.randn(p.shape, generator=gen, dtype=p.dtype)
        if name == "embedding.weight":
            # only rows reached by the batch influence the loss
            v = v * (g.abs().sum(1, keepdim=True) > 0)
        v = v / v.norm().clamp_min(1e-30)
        if float(g.norm()) > 0:
            v = v + g / g.norm()
            v = v / v.norm()
        base = p.detach().clone()
        analytic = float((g * v).sum())
        estimates = []
        with torch.no_grad():
            for eps in steps:
                p.copy_(base + eps * v)
                up = float(objective(model))
                p.copy_(base - eps * v)
                down = float(objective(model))
                estimates.append((up - down) / (2 * eps))
            p.copy_(base)
        numeric = min(estimates, key=lambda x: abs(x - analytic))
        out.append(GradCheckResult(name, analytic, numeric, float(g.norm())))
    return out
