"""Online tracking-by-detection core.

A generic SORT/ByteTrack-style skeleton: constant-velocity Kalman motion,
IoU+appearance cost matrices with optimal assignment, two-stage
association over high/low confidence detections, and tracklet lifecycle.
The post-association correction layer hooks in after each stage.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import motion
from .appearance import DISTANCE_FNS, DISTANCE_MAX, AppearanceStore
from .config import TrackerConfig
from .correction import (
    CorrectionThresholds,
    OverlapPairSet,
    correct_matches,
    end_of_frame_bookkeeping,
)
from .geometry import BoundingBox, iou

# Sentinel for gated (impossible) assignment entries.
GATED = np.inf
_GATE_SUBSTITUTE = 1e9


@dataclass
class Detection:
    frame: int
    box: BoundingBox
    confidence: float
    feature: np.ndarray
    source_index: int

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence out of [0,1]: {self.confidence}")


class TrackStatus(enum.Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    LOST = "lost"


class Tracklet:
    """Identity-bearing track with motion state and lifecycle status."""

    def __init__(self, track_id: int, detection: Detection):
        self.id = track_id
        self.state = motion.initiate(detection.box)
        self.last_box = detection.box
        # posterior state box; frozen while lost, used for overlap bookkeeping
        self.reported_box = motion.state_to_box(self.state)
        self.status = TrackStatus.TENTATIVE
        self.age = 0
        self.time_since_update = 0
        self.hits = 1
        self.current_feature = np.array(detection.feature, dtype=np.float64)
        self.last_confidence = detection.confidence

    def predict(self):
        self.state = motion.predict(self.state)
        self.age += 1

    @property
    def predicted_box(self) -> BoundingBox:
        return motion.state_to_box(self.state)

    def mark_matched(self, detection: Detection, confirm_hits: int):
        self.state = motion.kf_update(self.state, detection.box)
        self.last_box = detection.box
        self.reported_box = motion.state_to_box(self.state)
        self.current_feature = np.array(detection.feature, dtype=np.float64)
        self.last_confidence = detection.confidence
        self.time_since_update = 0
        self.hits += 1
        if self.status is TrackStatus.LOST:
            self.status = TrackStatus.CONFIRMED
        elif self.status is TrackStatus.TENTATIVE and self.hits >= confirm_hits:
            self.status = TrackStatus.CONFIRMED

    def mark_missed(self):
        self.time_since_update += 1
        if self.status is TrackStatus.CONFIRMED:
            self.status = TrackStatus.LOST


@dataclass
class MatchSet:
    """Assignment outcome: one-to-one matches plus unmatched residues.

    Matches are (detection index, tracklet id) pairs; indices refer to the
    frame's detection list. Every detection and tracklet of the set's
    universe appears in exactly one field.
    """

    matches: list[tuple[int, int]] = field(default_factory=list)
    unmatched_detections: list[int] = field(default_factory=list)
    unmatched_tracklets: list[int] = field(default_factory=list)

    def validate(self):
        dets = [d for d, _ in self.matches] + list(self.unmatched_detections)
        trks = [t for _, t in self.matches] + list(self.unmatched_tracklets)
        if len(dets) != len(set(dets)):
            raise AssertionError("detection appears twice in MatchSet")
        if len(trks) != len(set(trks)):
            raise AssertionError("tracklet appears twice in MatchSet")

    def sorted_copy(self) -> "MatchSet":
        return MatchSet(
            matches=sorted(self.matches),
            unmatched_detections=sorted(self.unmatched_detections),
            unmatched_tracklets=sorted(self.unmatched_tracklets),
        )


def build_cost_matrix(tracklets, detections, appearance_weight, distance_fn,
                      distance_max=2.0):
    """Blended IoU/appearance cost, gated to +inf where boxes are disjoint.

    cost(i, j) = (1-w) * (1 - iou) + w * distance/distance_max
    """
    n, m = len(tracklets), len(detections)
    cost = np.zeros((n, m), dtype=np.float64)
    w = appearance_weight
    for i, trk in enumerate(tracklets):
        pbox = trk.predicted_box
        for j, det in enumerate(detections):
            overlap = iou(pbox, det.box)
            if overlap == 0.0:
                cost[i, j] = GATED
                continue
            c = (1.0 - w) * (1.0 - overlap)
            if w > 0.0:
                d = distance_fn(trk.current_feature, det.feature)
                c += w * min(d / distance_max, 1.0)
            cost[i, j] = c
    return cost


def hungarian_assign(cost, max_cost):
    """Minimum-total-cost one-to-one assignment with post-hoc pruning.

    The full matching is optimized first (gated entries replaced by a
    dominant finite penalty), then pairs that are gated or exceed max_cost
    are dropped to the unmatched sets.

    Returns (pairs, unmatched_rows, unmatched_cols) with row/col indices.
    """
    n, m = cost.shape
    if n == 0 or m == 0:
        return [], list(range(n)), list(range(m))
    finite = np.where(np.isinf(cost), _GATE_SUBSTITUTE, cost)
    rows, cols = linear_sum_assignment(finite)
    pairs = []
    matched_rows, matched_cols = set(), set()
    for r, c in zip(rows, cols):
        if np.isinf(cost[r, c]) or cost[r, c] > max_cost:
            continue
        pairs.append((int(r), int(c)))
        matched_rows.add(int(r))
        matched_cols.add(int(c))
    unmatched_rows = [i for i in range(n) if i not in matched_rows]
    unmatched_cols = [j for j in range(m) if j not in matched_cols]
    return pairs, unmatched_rows, unmatched_cols


def _associate(tracklets, det_indices, detections, appearance_weight,
               distance_fn, distance_max, max_cost) -> MatchSet:
    """Run assignment of the given tracklets against a detection subset."""
    dets = [detections[j] for j in det_indices]
    cost = build_cost_matrix(tracklets, dets, appearance_weight, distance_fn,
                             distance_max)
    pairs, u_rows, u_cols = hungarian_assign(cost, max_cost)
    ms = MatchSet(
        matches=sorted((det_indices[c], tracklets[r].id) for r, c in pairs),
        unmatched_detections=sorted(det_indices[c] for c in u_cols),
        unmatched_tracklets=sorted(tracklets[r].id for r in u_rows),
    )
    ms.validate()
    return ms


class Tracker:
    """Per-sequence online tracker with the correction layer attached.

    One instance per sequence; feed frames in order via step(). Not
    shareable across concurrent workers.
    """

    def __init__(self, config: TrackerConfig | None = None):
        self.config = config or TrackerConfig()
        self.tracklets: list[Tracklet] = []
        self._next_id = 1
        self.store = AppearanceStore()
        self.pairs = OverlapPairSet.empty()
        self.thresholds = CorrectionThresholds(
            tau_update=self.config.tau_update,
            tau_overlap=self.config.tau_overlap,
            tau_min=self.config.tau_min,
            tau_dif=self.config.tau_dif,
        )
        self._distance_fn = DISTANCE_FNS[self.config.similarity]
        self._distance_max = DISTANCE_MAX[self.config.similarity]

    def _tracklet_by_id(self, tid: int) -> Tracklet:
        for t in self.tracklets:
            if t.id == tid:
                return t
        raise KeyError(tid)

    def two_stage_associate(self, detections) -> tuple[MatchSet, list[int]]:
        """Two-stage association with per-stage correction hooks.

        Stage 1 matches high-confidence detections against confirmed and
        lost tracklets with the blended IoU+appearance cost. Stage 2
        matches the low-confidence remainder against still-unmatched
        tracklets on IoU alone. Tentative tracklets get a final IoU-only
        pass over leftover high-confidence detections.

        Returns the combined MatchSet over confirmed+lost tracklets and
        the tentative-pass matches as a separate list.
        """
        cfg = self.config
        high = [j for j, d in enumerate(detections) if d.confidence >= cfg.conf_split]
        low = [j for j, d in enumerate(detections) if d.confidence < cfg.conf_split]
        pool1 = [t for t in self.tracklets
                 if t.status in (TrackStatus.CONFIRMED, TrackStatus.LOST)]

        ms = _associate(pool1, high, detections, cfg.appearance_weight,
                        self._distance_fn, self._distance_max, cfg.max_cost)
        if cfg.correction_stage1:
            ms = correct_matches(ms, self.pairs, self.store, detections,
                                 self.thresholds, self._distance_fn,
                                 candidates=list(ms.matches))

        # stage 2: leftover tracklets vs low-confidence detections, IoU only
        pool2 = [self._tracklet_by_id(tid) for tid in ms.unmatched_tracklets]
        ms2 = _associate(pool2, low, detections, 0.0, self._distance_fn,
                         self._distance_max, cfg.max_cost)
        combined = MatchSet(
            matches=sorted(ms.matches + ms2.matches),
            unmatched_detections=sorted(ms.unmatched_detections + ms2.unmatched_detections),
            unmatched_tracklets=sorted(ms2.unmatched_tracklets),
        )
        combined.validate()
        if cfg.correction_stage2:
            combined = correct_matches(combined, self.pairs, self.store,
                                       detections, self.thresholds,
                                       self._distance_fn,
                                       candidates=list(ms2.matches))

        # tentative pass: unconfirmed tracklets vs leftover high-confidence
        # detections; appearance is unreliable for day-old tracks, IoU only
        tentative = [t for t in self.tracklets if t.status is TrackStatus.TENTATIVE]
        leftover_high = [j for j in combined.unmatched_detections
                         if detections[j].confidence >= cfg.conf_split]
        ms3 = _associate(tentative, leftover_high, detections, 0.0,
                         self._distance_fn, self._distance_max, cfg.max_cost)
        tentative_matches = list(ms3.matches)

        final = MatchSet(
            matches=sorted(combined.matches + tentative_matches),
            unmatched_detections=sorted(
                set(combined.unmatched_detections) - {d for d, _ in tentative_matches}
            ),
            unmatched_tracklets=sorted(combined.unmatched_tracklets
                                       + ms3.unmatched_tracklets),
        )
        final.validate()
        return final, tentative_matches

    def lifecycle_step(self, match_result: MatchSet, detections, frame: int):
        """Apply matches, age out the missed, and spawn new tracklets."""
        cfg = self.config
        matched_ids = set()
        for det_idx, tid in match_result.matches:
            trk = self._tracklet_by_id(tid)
            trk.mark_matched(detections[det_idx], cfg.confirm_hits)
            matched_ids.add(tid)

        survivors = []
        for trk in self.tracklets:
            if trk.id in matched_ids:
                survivors.append(trk)
                continue
            was_tentative = trk.status is TrackStatus.TENTATIVE
            trk.mark_missed()
            if was_tentative:
                self.store.drop(trk.id)
                continue  # unconfirmed tracks do not survive a miss
            if trk.time_since_update > cfg.max_lost_frames:
                self.store.drop(trk.id)
                continue
            survivors.append(trk)
        self.tracklets = survivors

        for det_idx in match_result.unmatched_detections:
            det = detections[det_idx]
            if det.confidence >= cfg.init_confidence:
                self.tracklets.append(Tracklet(self._next_id, det))
                self._next_id += 1

    def step(self, frame: int, detections: list[Detection]) -> list[Tracklet]:
        """Process one frame; returns the tracklets to report."""
        for trk in self.tracklets:
            trk.predict()

        match_result, _ = self.two_stage_associate(detections)
        self.lifecycle_step(match_result, detections, frame)

        # carry overlap status and gated appearance memory to frame f+1
        live = [(t.id, t.reported_box, t.current_feature) for t in self.tracklets]
        _, self.pairs, _ = end_of_frame_bookkeeping(
            live, self.store, self.thresholds, frame)

        return [t for t in self.tracklets
                if t.status is TrackStatus.CONFIRMED and t.time_since_update == 0]
