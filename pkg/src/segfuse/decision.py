"""Prior estimation and prior-adjusted decision rules.

The standard argmax rule, the prior-compensated rule (dividing posteriors by
class priors), and the continuum between them: priors are blended towards
the uninformative all-ones field by a degree ``alpha`` in [0, 1], where
alpha=0 reproduces plain argmax and alpha=1 applies the full prior
correction that favors rare classes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from segfuse.errors import ValidationError
from segfuse.tensor_io import LabelMask, PriorField, ProbTensor, _freeze

DEFAULT_EPSILON_FLOOR = 1e-9


@dataclass(frozen=True)
class DecisionConfig:
    """Parameters of the adjusted decision rule.

    alpha: degree of prior correction, 0 = plain argmax, 1 = full.
    prior_mode: how priors were estimated ("positional" or "global").
    epsilon_floor: lower bound applied to blended priors before division.
    """

    alpha: float = 1.0
    prior_mode: str = "positional"
    epsilon_floor: float = DEFAULT_EPSILON_FLOOR

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValidationError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.prior_mode not in ("positional", "global"):
            raise ValidationError(f"unknown prior mode {self.prior_mode!r}")
        if self.epsilon_floor <= 0.0:
            raise ValidationError("epsilon_floor must be positive")


@dataclass(frozen=True)
class LikelihoodField:
    """Per-pixel prior-adjusted likelihoods, renormalized to sum 1.

    Same (H, W, C) shape as the probability tensor it came from, float64.
    """

    data: np.ndarray

    @property
    def classes(self) -> int:
        return self.data.shape[2]


def estimate_priors(masks: Sequence[LabelMask], classes: int, mode: str = "positional") -> PriorField:
    """Estimate class priors as (pixel-wise) label frequencies over masks.

    Positional mode returns an (H, W, C) field: at each position, the share
    of non-ignore masks labeling that position with each class (all zeros
    where every mask ignores the position). Global mode returns a (C,)
    frequency vector over all non-ignore pixels.
    """
    if not masks:
        raise ValidationError("need at least one mask to estimate priors")
    shape = masks[0].data.shape
    counts = np.zeros(shape + (classes,), dtype=np.int64)
    for mask in masks:
        if mask.data.shape != shape:
            raise ValidationError(
                f"mask shapes differ: {mask.data.shape} vs {shape}"
            )
        mask.check_classes(classes)
        valid = mask.data != mask.ignore_label
        rows, cols = np.nonzero(valid)
        np.add.at(counts, (rows, cols, mask.data[rows, cols]), 1)
    if mode == "positional":
        denom = counts.sum(axis=2, keepdims=True)
        with np.errstate(invalid="ignore"):
            priors = counts / np.maximum(denom, 1)
        return PriorField.from_array(priors.astype(np.float32))
    if mode == "global":
        totals = counts.sum(axis=(0, 1))
        n = totals.sum()
        if n == 0:
            raise ValidationError("all pixels are ignored; no priors to estimate")
        return PriorField.from_array((totals / n).astype(np.float32))
    raise ValidationError(f"unknown prior mode {mode!r}")


def interpolate_priors(priors: PriorField, alpha: float) -> PriorField:
    """Blend priors towards the uninformative all-ones field.

    Elementwise (1 - alpha) * 1 + alpha * prior; alpha=0 gives all ones,
    alpha=1 returns the priors unchanged.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValidationError(f"alpha must be in [0, 1], got {alpha}")
    blended = (1.0 - alpha) + alpha * priors.data.astype(np.float64)
    return PriorField(_freeze(blended.astype(np.float32)))


def _blended_priors(probs: ProbTensor, priors: PriorField, cfg: DecisionConfig) -> np.ndarray:
    prior = priors.data.astype(np.float64)
    if priors.mode == "global":
        prior = np.broadcast_to(prior, probs.data.shape)
    elif prior.shape != probs.data.shape:
        raise ValidationError(
            f"prior shape {prior.shape} does not match tensor {probs.data.shape}"
        )
    blended = (1.0 - cfg.alpha) + cfg.alpha * prior
    return np.maximum(blended, cfg.epsilon_floor)


def adjusted_likelihood(probs: ProbTensor, priors: PriorField, cfg: DecisionConfig) -> LikelihoodField:
    """Posteriors divided by blended priors, renormalized per pixel."""
    ratios = probs.data.astype(np.float64) / _blended_priors(probs, priors, cfg)
    ratios /= ratios.sum(axis=2, keepdims=True)
    return LikelihoodField(_freeze(ratios))


def decide(probs: ProbTensor, priors: PriorField, cfg: DecisionConfig) -> LabelMask:
    """Adjusted decision rule: per-pixel argmax of the adjusted likelihoods.

    Ties break to the lowest class index. alpha=0 reproduces the plain
    argmax of the posteriors; alpha=1 is the full prior-compensated rule.
    """
    field = adjusted_likelihood(probs, priors, cfg)
    return LabelMask.from_array(np.argmax(field.data, axis=2).astype(np.uint8))


def argmax_mask(probs: ProbTensor) -> LabelMask:
    """Plain per-pixel argmax of the posteriors (ties to lowest index)."""
    return LabelMask.from_array(np.argmax(probs.data, axis=2).astype(np.uint8))
