"""Post-association identity correction.

At the end of each frame, heavily overlapped tracklet pairs are recorded
from the pairwise IoA matrix. On the next frame, any detection matched to
a pair's prime tracklet is re-evaluated against the stored (pre-overlap)
features of both pair members; when the detection clearly belongs to the
auxiliary tracklet, the match is reassigned before the error propagates.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .appearance import AppearanceStore
from .geometry import pairwise_ioa_matrix

log = logging.getLogger(__name__)


class CorrectionStateError(RuntimeError):
    """Internal consistency violation between match set and feature store."""


@dataclass(frozen=True)
class CorrectionThresholds:
    tau_update: float = 0.3
    tau_overlap: float = 0.8
    tau_min: float = 0.8
    tau_dif: float = 0.4

    def __post_init__(self):
        for name in ("tau_update", "tau_overlap"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must be in [0,1], got {v}")
        for name in ("tau_min", "tau_dif"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if self.tau_overlap < self.tau_update:
            log.warning(
                "tau_overlap (%.3f) < tau_update (%.3f): pairs will form from "
                "overlaps that do not even suppress feature updates",
                self.tau_overlap, self.tau_update,
            )


@dataclass(frozen=True)
class OverlapPair:
    prime: int
    aux: int
    ioa_value: float

    def __post_init__(self):
        if self.prime == self.aux:
            raise ValueError("overlap pair cannot pair a tracklet with itself")


@dataclass
class OverlapPairSet:
    """Directed prime -> aux pairs, keyed by prime id.

    Formed from one frame's final tracklets and consumed exactly one frame
    later; stale sets are replaced, never reused.
    """

    pairs: dict[int, OverlapPair] = field(default_factory=dict)
    formed_at_frame: int = -1

    @classmethod
    def empty(cls) -> "OverlapPairSet":
        return cls()

    def __len__(self) -> int:
        return len(self.pairs)

    def get(self, prime: int) -> OverlapPair | None:
        return self.pairs.get(prime)


def detect_overlap_pairs(ioa_matrix: np.ndarray, ids, tau_overlap: float,
                         frame: int = -1) -> OverlapPairSet:
    """Form prime->aux pairs from off-diagonal IoA entries >= tau_overlap.

    The row index (IoA reference box) is the prime. When several partners
    qualify for one prime, the max-IoA partner is kept; ties break to the
    smallest id for determinism.
    """
    n = len(ids)
    if ioa_matrix.shape != (n, n):
        raise ValueError(
            f"IoA matrix shape {ioa_matrix.shape} inconsistent with {n} ids")
    pairs: dict[int, OverlapPair] = {}
    for i in range(n):
        best_j = -1
        best_val = -1.0
        for j in range(n):
            if j == i:
                continue
            v = float(ioa_matrix[i, j])
            if v >= tau_overlap and v > best_val:
                best_val = v
                best_j = j
        if best_j >= 0:
            pairs[ids[i]] = OverlapPair(prime=ids[i], aux=ids[best_j],
                                        ioa_value=best_val)
    return OverlapPairSet(pairs=pairs, formed_at_frame=frame)


def correct_matches(match_set, pair_set: OverlapPairSet, store: AppearanceStore,
                    detections, thresholds: CorrectionThresholds, distance_fn,
                    candidates=None):
    """Reassign mismatched detections inside overlapped pairs.

    For each candidate match (d, prime) whose tracklet keys an overlap
    pair, compares the detection feature against the stored features of
    prime and aux. When the prime distance exceeds tau_min and beats the
    aux distance by at least tau_dif, the detection moves to the aux
    tracklet; the prime joins the unmatched tracklets, and any detection
    the aux previously held is displaced to the unmatched detections.

    Args:
        match_set: current MatchSet (not mutated; a corrected copy returns)
        pair_set: overlap pairs formed on the previous frame
        store: per-tracklet stored features covering all live tracklets
        detections: the frame's detection list (indexed by match entries)
        thresholds: correction thresholds
        distance_fn: appearance distance (larger = less alike)
        candidates: matches eligible for re-evaluation, defaults to all;
            stage hooks pass only the matches their own stage produced
    """
    det_of_trk = {t: d for d, t in match_set.matches}
    unmatched_dets = set(match_set.unmatched_detections)
    unmatched_trks = set(match_set.unmatched_tracklets)

    if candidates is None:
        candidates = list(match_set.matches)
    # deterministic processing order
    candidates = sorted(candidates, key=lambda m: (m[1], m[0]))

    for det_idx, prime in candidates:
        if det_of_trk.get(prime) != det_idx:
            continue  # displaced or already reassigned by an earlier candidate
        pair = pair_set.get(prime)
        if pair is None:
            continue
        aux = pair.aux
        if aux not in store:
            continue
        if aux not in det_of_trk and aux not in unmatched_trks:
            continue  # aux outside this match set's tracklet universe
        if prime not in store:
            raise CorrectionStateError(
                f"matched tracklet {prime} has no stored appearance feature")

        feat = detections[det_idx].feature
        s_pri = distance_fn(feat, store.get(prime))
        s_aux = distance_fn(feat, store.get(aux))
        if s_pri >= thresholds.tau_min and s_pri - s_aux >= thresholds.tau_dif:
            del det_of_trk[prime]
            unmatched_trks.add(prime)
            if aux in det_of_trk:
                displaced = det_of_trk.pop(aux)
                unmatched_dets.add(displaced)
            else:
                unmatched_trks.discard(aux)
            det_of_trk[aux] = det_idx

    corrected = type(match_set)(
        matches=sorted((d, t) for t, d in det_of_trk.items()),
        unmatched_detections=sorted(unmatched_dets),
        unmatched_tracklets=sorted(unmatched_trks),
    )
    corrected.validate()
    return corrected


def end_of_frame_bookkeeping(tracklets, store: AppearanceStore,
                             thresholds: CorrectionThresholds, frame: int):
    """Carry overlap status and feature memory to the next frame.

    Computes the pairwise IoA matrix over the frame's final tracklets,
    forms the overlap pairs, refreshes stored features for tracklets that
    are overlap-free, and registers initial features for newcomers.

    Args:
        tracklets: list of (id, last reported box, current feature)
    Returns:
        (ioa_matrix, pair_set, store)
    """
    ids = [tid for tid, _, _ in tracklets]
    boxes = [box for _, box, _ in tracklets]
    feats = [f for _, _, f in tracklets]

    matrix = pairwise_ioa_matrix(boxes)
    pair_set = detect_overlap_pairs(matrix, ids, thresholds.tau_overlap, frame)
    store.filter_and_update(ids, feats, matrix, thresholds.tau_update, frame)
    for tid, feat in zip(ids, feats):
        store.register_new(tid, feat, frame)
    return matrix, pair_set, store
