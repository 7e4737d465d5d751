"""Connected components of predicted masks and per-segment feature vectors.

A segment is one 8-connected component of constant predicted class. Its
interior holds the pixels whose full 8-neighborhood stays inside the
segment (image-border pixels always count as boundary); the neighborhood
ring is the one-pixel dilation of the segment clipped to the image.

The feature vector aggregates, per segment: size statistics, dispersion
means over the whole segment / interior / boundary, the normalized
geometric center, the mean likelihood of the predicted class, and two
per-class blocks over the neighborhood ring (class ratios and mean
likelihoods). Dimension is 17 + 2C.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from segfuse._kernels import label_components
from segfuse.decision import LikelihoodField
from segfuse.dispersion import DispersionMaps
from segfuse.errors import ValidationError
from segfuse.tensor_io import LabelMask


@dataclass(frozen=True)
class Segment:
    """One 8-connected component of constant predicted class.

    ``rows``/``cols`` are scanline-ordered pixel coordinates; ``interior``
    flags, per pixel, whether the full 8-neighborhood lies in the segment.
    """

    class_id: int
    rows: np.ndarray
    cols: np.ndarray
    interior: np.ndarray
    bbox: tuple[int, int, int, int]

    @property
    def size(self) -> int:
        return self.rows.shape[0]

    @property
    def interior_size(self) -> int:
        return int(self.interior.sum())

    @property
    def boundary_size(self) -> int:
        return self.size - self.interior_size

    def pixel_set(self) -> set[tuple[int, int]]:
        return set(zip(self.rows.tolist(), self.cols.tolist()))


def _interior_map(mask: np.ndarray) -> np.ndarray:
    """Pixels whose 8 neighbors all exist and share the pixel's value."""
    h, w = mask.shape
    interior = np.zeros((h, w), dtype=bool)
    if h < 3 or w < 3:
        return interior
    center = mask[1:-1, 1:-1]
    inner = np.ones((h - 2, w - 2), dtype=bool)
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            inner &= mask[1 + dr:h - 1 + dr, 1 + dc:w - 1 + dc] == center
    interior[1:-1, 1:-1] = inner
    return interior


def connected_components(mask: LabelMask, class_filter: Optional[int] = None) -> list[Segment]:
    """Extract 8-connected constant-class segments in scanline order.

    Every pixel (including ignore-labeled ones) belongs to exactly one
    component of its own value; ``class_filter`` keeps one class only.
    """
    data = mask.data
    labels = label_components(data)
    interior = _interior_map(data)

    flat_labels = labels.ravel()
    order = np.argsort(flat_labels, kind="stable")
    sorted_labels = flat_labels[order]
    boundaries = np.flatnonzero(np.diff(sorted_labels)) + 1
    groups = np.split(order, boundaries)

    h, w = data.shape
    segments = []
    for flat in groups:
        rows = (flat // w).astype(np.intp)
        cols = (flat % w).astype(np.intp)
        class_id = int(data[rows[0], cols[0]])
        if class_filter is not None and class_id != class_filter:
            continue
        seg_interior = interior[rows, cols]
        for arr in (rows, cols, seg_interior):
            arr.flags.writeable = False
        segments.append(
            Segment(
                class_id=class_id,
                rows=rows,
                cols=cols,
                interior=seg_interior,
                bbox=(int(rows.min()), int(cols.min()), int(rows.max()), int(cols.max())),
            )
        )
    return segments


def geometric_center(seg: Segment) -> tuple[float, float]:
    """Arithmetic mean of the segment's pixel coordinates, (row, col)."""
    return float(seg.rows.mean()), float(seg.cols.mean())


def _ring_indices(seg: Segment, shape: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    """One-pixel dilation of the segment minus the segment, clipped."""
    h, w = shape
    r0 = max(seg.bbox[0] - 1, 0)
    c0 = max(seg.bbox[1] - 1, 0)
    r1 = min(seg.bbox[2] + 2, h)
    c1 = min(seg.bbox[3] + 2, w)
    window = np.zeros((r1 - r0, c1 - c0), dtype=bool)
    window[seg.rows - r0, seg.cols - c0] = True
    dilated = np.zeros_like(window)
    wh, ww = window.shape
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            sr0, sr1 = max(dr, 0), wh + min(dr, 0)
            sc0, sc1 = max(dc, 0), ww + min(dc, 0)
            dilated[sr0:sr1, sc0:sc1] |= window[sr0 - dr:sr1 - dr, sc0 - dc:sc1 - dc]
    ring = dilated & ~window
    rows, cols = np.nonzero(ring)
    return rows + r0, cols + c0


def neighborhood_ratios(seg: Segment, mask: LabelMask, classes: int) -> np.ndarray:
    """Share of the segment's neighborhood ring predicted as each class.

    The denominator is the full ring size; ring pixels whose value is not a
    valid class (e.g. the ignore label) contribute to no entry, so the
    vector sums to at most 1. A segment filling the whole frame has an
    empty ring and gets the all-zero vector.
    """
    rows, cols = _ring_indices(seg, mask.data.shape)
    ratios = np.zeros(classes, dtype=np.float64)
    if rows.size == 0:
        return ratios
    values = mask.data[rows, cols]
    counts = np.bincount(values[values < classes], minlength=classes)
    return counts / rows.size


def disagreement_set(ml_mask: LabelMask, bayes_mask: LabelMask, class_id: int) -> list[Segment]:
    """Class-c segments of the adjusted mask on which the rules disagree.

    Keeps the components where the baseline mask differs at every pixel,
    i.e. the components not touching any baseline pixel of the class.
    These are the candidates for meta-classification.
    """
    if ml_mask.data.shape != bayes_mask.data.shape:
        raise ValidationError("mask shapes differ")
    return [
        seg
        for seg in connected_components(ml_mask, class_filter=class_id)
        if not (bayes_mask.data[seg.rows, seg.cols] == class_id).any()
    ]


FEATURE_BASE_NAMES = (
    "size",
    "interior_size",
    "boundary_size",
    "boundary_share",
    "frame_share",
    "entropy_mean",
    "margin_mean",
    "variation_ratio_mean",
    "entropy_interior_mean",
    "margin_interior_mean",
    "variation_ratio_interior_mean",
    "entropy_boundary_mean",
    "margin_boundary_mean",
    "variation_ratio_boundary_mean",
    "center_row_rel",
    "center_col_rel",
    "class_likelihood_mean",
)


def feature_names(classes: int) -> list[str]:
    """Ordered schema of the per-segment feature vector (17 + 2C entries)."""
    names = list(FEATURE_BASE_NAMES)
    names += [f"neighbor_ratio_{c}" for c in range(classes)]
    names += [f"neighbor_likelihood_{c}" for c in range(classes)]
    return names


def segment_features(
    seg: Segment,
    maps: DispersionMaps,
    likelihood: LikelihoodField,
    ml_mask: LabelMask,
    shape: tuple[int, int, int],
) -> np.ndarray:
    """Aggregate the feature vector of one segment (see feature_names).

    Means over an empty interior fall back to the whole-segment mean so
    thin segments still produce finite features.
    """
    h, w, classes = shape
    rows, cols = seg.rows, seg.cols
    inner = seg.interior
    outer = ~inner

    def tri_means(heatmap: np.ndarray) -> tuple[float, float, float]:
        values = heatmap[rows, cols]
        whole = values.mean()
        interior = values[inner].mean() if inner.any() else whole
        boundary = values[outer].mean() if outer.any() else whole
        return float(whole), float(interior), float(boundary)

    e_all, e_in, e_bd = tri_means(maps.entropy)
    m_all, m_in, m_bd = tri_means(maps.margin)
    v_all, v_in, v_bd = tri_means(maps.variation_ratio)

    center_r, center_c = geometric_center(seg)
    ratios = neighborhood_ratios(seg, ml_mask, classes)
    ring_rows, ring_cols = _ring_indices(seg, ml_mask.data.shape)
    if ring_rows.size:
        ring_likelihood = likelihood.data[ring_rows, ring_cols].mean(axis=0)
    else:
        ring_likelihood = np.zeros(classes, dtype=np.float64)

    values = [
        float(seg.size),
        float(seg.interior_size),
        float(seg.boundary_size),
        seg.boundary_size / seg.size,
        seg.size / (h * w),
        e_all,
        m_all,
        v_all,
        e_in,
        m_in,
        v_in,
        e_bd,
        m_bd,
        v_bd,
        center_r / max(h - 1, 1),
        center_c / max(w - 1, 1),
        float(likelihood.data[rows, cols, seg.class_id].mean()),
    ]
    return np.concatenate([values, ratios, ring_likelihood])


def features_matrix(
    segs: Sequence[Segment],
    maps: DispersionMaps,
    likelihood: LikelihoodField,
    ml_mask: LabelMask,
    shape: tuple[int, int, int],
) -> np.ndarray:
    """Stack per-segment feature vectors into an (n, 17 + 2C) matrix."""
    q = 17 + 2 * shape[2]
    if not segs:
        return np.empty((0, q), dtype=np.float64)
    return np.stack(
        [segment_features(s, maps, likelihood, ml_mask, shape) for s in segs]
    )
