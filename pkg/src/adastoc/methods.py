"""Step computation and acceptance tests for the two concrete methods.

Step search: the model is phi + g.s + (1/(2 alpha)) s.H.s with H positive
definite (identity by default), minimized by s = -alpha * H^{-1} g; a step
is accepted when the estimated decrease beats -theta * g.s minus the noise
compensation r.

Trust region (first order): the model is linear on the ball of radius
alpha, minimized exactly by s = -alpha * g / ||g||; acceptance requires the
decrease-to-model-reduction ratio to reach theta and additionally
||g|| >= theta2 * alpha.

All acceptance inequalities are non-strict: ties accept.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError, NumericError

__all__ = [
    "StepProposal",
    "sass_step",
    "sass_accept",
    "storm_step",
    "storm_accept",
    "SassMethod",
    "StormMethod",
]


@dataclass(frozen=True)
class StepProposal:
    """A candidate step with its model reduction and gradient-estimate norm."""

    step: np.ndarray = field(repr=False)
    model_reduction: float
    grad_estimate_norm: float


def sass_step(g: np.ndarray, h: np.ndarray | None, alpha: float) -> StepProposal:
    """Step -alpha * H^{-1} g with model reduction (alpha/2) * g.H^{-1}.g.

    h = None means the identity.  A singular h propagates the linear-solve
    error from the factorization.
    """
    if alpha <= 0.0:
        raise InvalidParameterError("alpha must be positive")
    g = np.asarray(g, dtype=float)
    if h is None:
        hinv_g = g
    else:
        hinv_g = np.linalg.solve(np.asarray(h, dtype=float), g)
    step = -alpha * hinv_g
    reduction = 0.5 * alpha * float(np.dot(g, hinv_g))
    return StepProposal(
        step=step,
        model_reduction=reduction,
        grad_estimate_norm=float(np.linalg.norm(g)),
    )


def sass_accept(
    f0: float, f_plus: float, g: np.ndarray, step: np.ndarray, theta: float, r: float
) -> bool:
    """Sufficient-reduction test f0 - f_plus >= -theta * g.step - r (ties accept)."""
    if not (np.isfinite(f0) and np.isfinite(f_plus)):
        raise NumericError("non-finite function estimates in acceptance test")
    return f0 - f_plus >= -theta * float(np.dot(g, step)) - r


def storm_step(g: np.ndarray, alpha: float) -> StepProposal:
    """Exact minimizer of the linear model over the ball of radius alpha.

    Returns -alpha * g / ||g|| with model reduction alpha * ||g||, or the
    zero step when g = 0.  The normalization is done at unit scale so the
    step stays on the ball even for subnormal gradient magnitudes.
    """
    if alpha <= 0.0:
        raise InvalidParameterError("alpha must be positive")
    g = np.asarray(g, dtype=float)
    scale = float(np.max(np.abs(g))) if g.size else 0.0
    if scale == 0.0:
        return StepProposal(step=np.zeros_like(g), model_reduction=0.0, grad_estimate_norm=0.0)
    unit = g / scale
    unit_norm = float(np.linalg.norm(unit))
    norm = scale * unit_norm
    return StepProposal(
        step=(-alpha / unit_norm) * unit,
        model_reduction=alpha * norm,
        grad_estimate_norm=norm,
    )


def storm_accept(
    f0: float,
    f_plus: float,
    model_reduction: float,
    theta: float,
    grad_norm: float,
    theta2: float,
    alpha: float,
    r: float,
) -> bool:
    """Ratio test (f0 - f_plus + r) / reduction >= theta plus ||g|| >= theta2 * alpha.

    A zero model reduction rejects outright; no division is performed.
    """
    if not (np.isfinite(f0) and np.isfinite(f_plus)):
        raise NumericError("non-finite function estimates in acceptance test")
    if model_reduction <= 0.0:
        return False
    if grad_norm < theta2 * alpha:
        return False
    return f0 - f_plus + r >= theta * model_reduction


class SassMethod:
    """Step-search plug-in: scaled negative gradient steps, decrease test with offset r."""

    family = "sass"
    stopping_modes = ("nonconvex", "strongly_convex")

    def __init__(self, h: np.ndarray | None = None):
        self.h = None if h is None else np.asarray(h, dtype=float)

    def propose(self, g: np.ndarray, alpha: float) -> StepProposal:
        return sass_step(g, self.h, alpha)

    def accepts(self, f0, f_plus, g, proposal: StepProposal, alpha: float, config) -> bool:
        return sass_accept(f0, f_plus, g, proposal.step, config.theta, config.r)


class StormMethod:
    """First-order trust-region plug-in: ball-constrained linear model steps."""

    family = "storm"
    stopping_modes = ("nonconvex",)

    def propose(self, g: np.ndarray, alpha: float) -> StepProposal:
        return storm_step(g, alpha)

    def accepts(self, f0, f_plus, g, proposal: StepProposal, alpha: float, config) -> bool:
        return storm_accept(
            f0,
            f_plus,
            proposal.model_reduction,
            config.theta,
            proposal.grad_estimate_norm,
            config.theta2,
            alpha,
            config.r,
        )
