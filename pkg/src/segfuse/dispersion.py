"""Pixel-wise uncertainty heatmaps over an adjusted-likelihood field.

Three dispersion measures per pixel, each in [0, 1]:

* entropy, normalized by log(C) so the uniform pixel scores 1;
* probability margin: 1 - top value + runner-up value;
* variation ratio: 1 - top value.

Computed once over the full frame; segment statistics sample these maps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from segfuse.decision import LikelihoodField
from segfuse.errors import ValidationError


@dataclass(frozen=True)
class DispersionMaps:
    """Per-pixel uncertainty heatmaps, each (H, W) float64 in [0, 1]."""

    entropy: np.ndarray
    margin: np.ndarray
    variation_ratio: np.ndarray


def dispersion_maps(likelihood: LikelihoodField) -> DispersionMaps:
    """Compute entropy, probability margin, and variation ratio maps.

    The 0*log(0) terms of the entropy are taken as 0, so one-hot pixels
    score exactly 0 on all three maps.
    """
    q = likelihood.data
    classes = q.shape[2]
    if classes < 2:
        raise ValidationError("dispersion needs at least 2 classes")

    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(q > 0.0, q * np.log(q), 0.0)
    entropy = -plogp.sum(axis=2) / np.log(classes)

    top_idx = np.argmax(q, axis=2)
    top = np.take_along_axis(q, top_idx[:, :, None], axis=2)[:, :, 0]
    masked = q.copy()
    np.put_along_axis(masked, top_idx[:, :, None], -np.inf, axis=2)
    runner_up = masked.max(axis=2)

    margin = 1.0 - top + runner_up
    variation_ratio = 1.0 - top
    for arr in (entropy, margin, variation_ratio):
        arr.flags.writeable = False
    return DispersionMaps(entropy, margin, variation_ratio)
