"""Appearance embeddings, distance functions, and the correction-layer
feature store with overlap-gated updates.

The store keeps one feature per tracklet id. While a tracklet's box
overlaps another above the update threshold, its stored feature is frozen
at the last clean frame, so the pre-occlusion appearance survives the
occlusion and can arbitrate reassignments afterwards.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _as_feature(values) -> np.ndarray:
    f = np.asarray(values, dtype=np.float64)
    if f.ndim != 1:
        raise ValueError(f"feature must be 1-D, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise ValueError("feature contains non-finite components")
    return f


def cosine_distance(u, v) -> float:
    """1 - cos(u, v), in [0, 2]. Raises on dimension mismatch or zero norm."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"feature dimension mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine distance undefined for zero-norm feature")
    d = 1.0 - float(np.dot(u, v)) / (nu * nv)
    # guard rounding outside [0, 2]
    return min(max(d, 0.0), 2.0)


def euclidean_distance(u, v) -> float:
    """l2 norm of u - v."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"feature dimension mismatch: {u.shape} vs {v.shape}")
    return float(np.linalg.norm(u - v))


DISTANCE_FNS = {
    "cosine": cosine_distance,
    "euclidean": euclidean_distance,
}

# Normalizers used when a distance feeds a [0, 1] cost term. For cosine the
# true range is [0, 2]; for euclidean over unit-norm embeddings the range is
# also [0, 2], and values are clipped for anything longer.
DISTANCE_MAX = {
    "cosine": 2.0,
    "euclidean": 2.0,
}


@dataclass
class StoredFeature:
    feature: np.ndarray
    stored_at_frame: int


class AppearanceStore:
    """Per-tracklet feature memory with overlap-gated updates."""

    def __init__(self):
        self._entries: dict[int, StoredFeature] = {}

    def __contains__(self, tracklet_id: int) -> bool:
        return tracklet_id in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, tracklet_id: int) -> np.ndarray:
        return self._entries[tracklet_id].feature

    def stored_at(self, tracklet_id: int) -> int:
        return self._entries[tracklet_id].stored_at_frame

    def ids(self) -> list[int]:
        return sorted(self._entries)

    def drop(self, tracklet_id: int) -> None:
        """Remove a dead tracklet's entry; missing ids are ignored."""
        self._entries.pop(tracklet_id, None)

    def register_new(self, tracklet_id: int, feature, frame: int) -> None:
        """Create an entry only if absent; never overwrites.

        Idempotent: newly initialized tracklets get their initial identity
        representation, existing entries are left untouched.
        """
        if tracklet_id in self._entries:
            return
        self._entries[tracklet_id] = StoredFeature(_as_feature(feature).copy(), frame)

    def filter_and_update(self, tracklet_ids, features, ioa_matrix, tau_update, frame):
        """Overlap-gated feature refresh for one frame.

        For tracklet i let m(i) be the max off-diagonal IoA over row i and
        column i. If m(i) < tau_update the stored feature is replaced by
        the current-frame feature; otherwise the prior entry is retained
        bit-identically. Tracklets with no prior entry are created when
        clean; dirty newcomers are left for register_new.

        Args:
            tracklet_ids: ordered ids matching the matrix axes
            features: current-frame feature per tracklet, same order
            ioa_matrix: square pairwise IoA matrix over the same ordering
            tau_update: suppression threshold in [0, 1]
            frame: current frame index, recorded on refreshed entries
        """
        n = len(tracklet_ids)
        if ioa_matrix.shape != (n, n):
            raise RuntimeError(
                f"IoA matrix shape {ioa_matrix.shape} does not match {n} tracklets"
            )
        if len(features) != n:
            raise RuntimeError("feature list does not match tracklet ordering")
        for i, tid in enumerate(tracklet_ids):
            if n == 1:
                m = 0.0
            else:
                row = np.delete(ioa_matrix[i, :], i)
                col = np.delete(ioa_matrix[:, i], i)
                m = float(max(row.max(), col.max()))
            if m < tau_update:
                self._entries[tid] = StoredFeature(_as_feature(features[i]).copy(), frame)
