"""Pointwise losses and the per-fold gradients used inside the IHT updates."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import Dataset, clip_features
from .errors import InvalidConfigError, InvalidInputError


@dataclass(frozen=True)
class Huber:
    """Quadratic below tau, linear beyond; derivative bounded by tau."""

    tau: float

    def __post_init__(self):
        if not self.tau > 0:
            raise InvalidConfigError(f"tau must be > 0, got {self.tau}")


@dataclass(frozen=True)
class AbsoluteL1:
    """Absolute loss; subgradient is the residual sign."""


@dataclass(frozen=True)
class Squared:
    """Plain squared loss, used by the light-tail baseline."""


LossKind = Huber | AbsoluteL1 | Squared


def huber_value(r: float, tau: float):
    """Loss value: r^2/2 if |r| < tau, else tau*|r| - tau^2/2."""
    if not tau > 0:
        raise InvalidInputError(f"tau must be > 0, got {tau}")
    r = np.asarray(r, dtype=np.float64)
    out = np.where(np.abs(r) < tau, 0.5 * r * r, tau * np.abs(r) - 0.5 * tau * tau)
    return float(out) if out.ndim == 0 else out


def huber_deriv(r: float, tau: float):
    """Derivative of the loss: r inside (-tau, tau), tau*sign(r) outside."""
    if not tau > 0:
        raise InvalidInputError(f"tau must be > 0, got {tau}")
    r = np.asarray(r, dtype=np.float64)
    out = np.clip(r, -tau, tau)
    return float(out) if out.ndim == 0 else out


def l1_subgrad(r: float):
    """Subgradient of |r|: sign(r), with the kink resolved as sign(0) = 0."""
    r = np.asarray(r, dtype=np.float64)
    if not np.isfinite(r).all():
        raise InvalidInputError("l1_subgrad requires finite input")
    out = np.sign(r)
    return float(out) if out.ndim == 0 else out


def batch_gradient(
    fold: Dataset,
    beta: np.ndarray,
    kind: LossKind,
    K: float | None,
    sign_on_clipped: bool = False,
) -> np.ndarray:
    """Mean per-sample gradient of the chosen loss over one fold.

    Features are clipped entrywise at K before entering the gradient (K=None
    skips clipping). For the absolute loss the residual sign is computed on
    the unclipped features by default, while the clipped features multiply
    the sign; ``sign_on_clipped`` selects the alternative reading. Every
    per-sample gradient coordinate is bounded by tau*K (Huber) or K (l1).
    """
    beta = np.asarray(beta, dtype=np.float64)
    if fold.n < 1:
        raise InvalidInputError("batch_gradient requires a nonempty fold")
    if beta.shape != (fold.d,):
        raise InvalidInputError(f"beta must have shape ({fold.d},), got {beta.shape}")
    xc = clip_features(fold.x, K) if K is not None else fold.x
    xc = np.ascontiguousarray(xc)
    if isinstance(kind, Huber):
        return _kernels.huber_grad(xc, fold.y, beta, kind.tau)
    if isinstance(kind, AbsoluteL1):
        x_sign = xc if sign_on_clipped else np.ascontiguousarray(fold.x)
        return _kernels.l1_grad(x_sign, xc, fold.y, beta)
    if isinstance(kind, Squared):
        return _kernels.squared_grad(xc, fold.y, beta)
    raise InvalidInputError(f"unknown loss kind: {kind!r}")


def huber_objective(fold: Dataset, beta: np.ndarray, tau: float, K: float | None) -> float:
    """Mean Huber loss of the fold at beta, on clipped features.

    batch_gradient(Huber) is the exact gradient of this function away from
    the kinks, which the finite-difference tests rely on.
    """
    xc = clip_features(fold.x, K) if K is not None else fold.x
    r = fold.y - xc @ np.asarray(beta, dtype=np.float64)
    return float(np.mean(huber_value(r, tau)))


def default_clip_level(d: int) -> float:
    """Default feature clip level: natural log of the dimension."""
    if d < 1:
        raise InvalidInputError(f"d must be >= 1, got {d}")
    return math.log(d) if d > 1 else 1.0
