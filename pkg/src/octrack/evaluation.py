"""Ground-truth scoring: CLEAR metrics, identity metrics, and
identity-switch duration statistics.

Frame-level correspondence follows the CLEAR-MOT convention: matches
carried over from the previous frame are kept while they still overlap,
the remainder is solved per frame by optimal assignment on IoU.
"""
from __future__ import annotations

import statistics
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geometry import BoundingBox, iou

IOU_MATCH_THRESHOLD = 0.5


@dataclass
class TrajectorySet:
    """Per-identity box timelines for one sequence."""

    boxes: dict[int, dict[int, BoundingBox]] = field(default_factory=dict)
    role: str = "ground-truth"

    def add(self, identity: int, frame: int, box: BoundingBox):
        timeline = self.boxes.setdefault(identity, {})
        if frame in timeline:
            raise ValueError(
                f"duplicate box for identity {identity} at frame {frame}")
        timeline[frame] = box

    def identities(self) -> list[int]:
        return sorted(self.boxes)

    def frames(self) -> list[int]:
        all_frames = set()
        for timeline in self.boxes.values():
            all_frames.update(timeline)
        return sorted(all_frames)

    def frame_boxes(self, frame: int) -> dict[int, BoundingBox]:
        return {i: t[frame] for i, t in self.boxes.items() if frame in t}

    def total_boxes(self) -> int:
        return sum(len(t) for t in self.boxes.values())


@dataclass
class SwitchEvent:
    gt_identity: int
    start_frame: int
    end_frame: int
    duration: int
    recovered: bool

    def __post_init__(self):
        if self.start_frame > self.end_frame or self.duration < 1:
            raise ValueError("invalid switch event extent")


def frame_match(gt_boxes: dict[int, BoundingBox],
                pred_boxes: dict[int, BoundingBox],
                carry: dict[int, int] | None = None,
                iou_threshold: float = IOU_MATCH_THRESHOLD) -> dict[int, int]:
    """One frame of CLEAR-MOT correspondence: gt id -> pred id.

    Pairs carried from the previous frame are preserved while both ids are
    present and still overlap above the threshold; leftovers are matched
    by Hungarian assignment on IoU.
    """
    result: dict[int, int] = {}
    used_preds: set[int] = set()
    if carry:
        for g, p in sorted(carry.items()):
            if g in gt_boxes and p in pred_boxes and p not in used_preds:
                if iou(gt_boxes[g], pred_boxes[p]) >= iou_threshold:
                    result[g] = p
                    used_preds.add(p)

    free_gt = sorted(g for g in gt_boxes if g not in result)
    free_pred = sorted(p for p in pred_boxes if p not in used_preds)
    if free_gt and free_pred:
        cost = np.ones((len(free_gt), len(free_pred)))
        for i, g in enumerate(free_gt):
            for j, p in enumerate(free_pred):
                cost[i, j] = 1.0 - iou(gt_boxes[g], pred_boxes[p])
        rows, cols = linear_sum_assignment(cost)
        for r, c in zip(rows, cols):
            if cost[r, c] <= 1.0 - iou_threshold:
                result[free_gt[r]] = free_pred[c]
    return result


def match_sequence(gt: TrajectorySet, pred: TrajectorySet,
                   iou_threshold: float = IOU_MATCH_THRESHOLD):
    """Per-frame correspondences over the union of frames.

    Returns dict frame -> {gt_id: pred_id}.
    """
    correspondences: dict[int, dict[int, int]] = {}
    carry: dict[int, int] = {}
    frames = sorted(set(gt.frames()) | set(pred.frames()))
    for f in frames:
        cur = frame_match(gt.frame_boxes(f), pred.frame_boxes(f), carry,
                          iou_threshold)
        correspondences[f] = cur
        # latest correspondence per gt id survives across gaps
        carry = {**carry, **cur}
    return correspondences


def clear_metrics(gt: TrajectorySet, pred: TrajectorySet):
    """(mota, fp, fn, idsw) under the CLEAR convention.

    IDSW counts frames where a gt identity's matched prediction id differs
    from its most recent previously matched prediction id.
    """
    total_gt = gt.total_boxes()
    if total_gt == 0:
        raise ValueError("MOTA undefined: ground truth contains no boxes")

    correspondences = match_sequence(gt, pred)
    fp = fn = idsw = 0
    last_matched: dict[int, int] = {}
    for f in sorted(correspondences):
        cur = correspondences[f]
        gt_here = gt.frame_boxes(f)
        pred_here = pred.frame_boxes(f)
        fn += len(gt_here) - len(cur)
        fp += len(pred_here) - len(cur)
        for g, p in cur.items():
            if g in last_matched and last_matched[g] != p:
                idsw += 1
            last_matched[g] = p
    mota = 1.0 - (fp + fn + idsw) / total_gt
    return mota, fp, fn, idsw


def _pair_hits(gt_timeline, pred_timeline, iou_threshold):
    hits = 0
    for f, box in gt_timeline.items():
        other = pred_timeline.get(f)
        if other is not None and iou(box, other) >= iou_threshold:
            hits += 1
    return hits


def id_metrics(gt: TrajectorySet, pred: TrajectorySet,
               iou_threshold: float = IOU_MATCH_THRESHOLD):
    """(idtp, idfp, idfn, idf1) from the globally optimal trajectory pairing.

    Bipartite matching over whole trajectories in the IDF1 convention:
    pairing a gt and a predicted trajectory costs the identity errors it
    leaves (missed gt frames + spurious predicted frames), with dummy
    partners charging a trajectory's full length.
    """
    gt_ids = gt.identities()
    pred_ids = pred.identities()
    total_gt = gt.total_boxes()
    total_pred = pred.total_boxes()
    n, m = len(gt_ids), len(pred_ids)
    size = n + m
    if size == 0:
        return 0, 0, 0, 1.0

    cost = np.zeros((size, size))
    hits_matrix = np.zeros((size, size))
    for i in range(size):
        for j in range(size):
            len_g = len(gt.boxes[gt_ids[i]]) if i < n else 0
            len_p = len(pred.boxes[pred_ids[j]]) if j < m else 0
            if i < n and j < m:
                hits = _pair_hits(gt.boxes[gt_ids[i]], pred.boxes[pred_ids[j]],
                                  iou_threshold)
            else:
                hits = 0
            hits_matrix[i, j] = hits
            cost[i, j] = (len_g - hits) + (len_p - hits)
    rows, cols = linear_sum_assignment(cost)
    idtp = int(sum(hits_matrix[r, c] for r, c in zip(rows, cols)))
    idfn = total_gt - idtp
    idfp = total_pred - idtp
    denom = 2 * idtp + idfp + idfn
    idf1 = (2 * idtp / denom) if denom > 0 else 1.0
    return idtp, idfp, idfn, idf1


def switch_duration_stats(gt: TrajectorySet, pred: TrajectorySet,
                          tau_long: int = 10,
                          iou_threshold: float = IOU_MATCH_THRESHOLD):
    """Duration statistics of identity-switch events.

    For each gt identity, an event opens on the first frame its matched
    prediction id differs from the pre-switch id, spans consecutive frames
    while the wrong id persists (unmatched frames pause but do not close
    the event), and closes recovered when the pre-switch id reappears or
    unrecovered at trajectory end. Duration is the frame span from first
    to last wrong match. Long ratio is the percentage of events strictly
    exceeding tau_long frames.

    Returns (count, mean, median, long_ratio, events).
    """
    if tau_long < 1:
        raise ValueError(f"tau_long must be >= 1, got {tau_long}")
    correspondences = match_sequence(gt, pred, iou_threshold)
    events: list[SwitchEvent] = []

    for g in gt.identities():
        timeline = sorted(gt.boxes[g])
        ref: int | None = None
        open_start: int | None = None
        open_end: int | None = None
        for f in timeline:
            p = correspondences.get(f, {}).get(g)
            if p is None:
                continue  # unmatched frame: pause
            if ref is None:
                ref = p
                continue
            if p != ref:
                if open_start is None:
                    open_start = f
                open_end = f
            else:
                if open_start is not None:
                    events.append(SwitchEvent(g, open_start, open_end,
                                              open_end - open_start + 1, True))
                    open_start = open_end = None
        if open_start is not None:
            events.append(SwitchEvent(g, open_start, open_end,
                                      open_end - open_start + 1, False))

    count = len(events)
    if count == 0:
        return 0, 0.0, 0.0, 0.0, events
    durations = [e.duration for e in events]
    mean = statistics.fmean(durations)
    median = float(statistics.median(durations))
    long_ratio = 100.0 * sum(1 for d in durations if d > tau_long) / count
    return count, mean, median, long_ratio, events


@dataclass
class EvalReport:
    mota: float
    idf1: float
    fp: int
    fn: int
    idsw: int
    idtp: int
    idfp: int
    idfn: int
    switch_count: int
    switch_mean: float
    switch_median: float
    long_ratio: float
    gt_boxes: int
    pred_boxes: int
    switch_stats_defined: bool
    events: list[SwitchEvent] = field(default_factory=list)

    def to_text(self) -> str:
        lines = [
            f"mota={self.mota:.6f}",
            f"idf1={self.idf1:.6f}",
            f"fp={self.fp}",
            f"fn={self.fn}",
            f"idsw={self.idsw}",
            f"idtp={self.idtp}",
            f"idfp={self.idfp}",
            f"idfn={self.idfn}",
            f"switch_count={self.switch_count}",
            f"switch_mean={self.switch_mean:.6f}",
            f"switch_median={self.switch_median:.6f}",
            f"long_ratio={self.long_ratio:.6f}",
            f"gt_boxes={self.gt_boxes}",
            f"pred_boxes={self.pred_boxes}",
            f"switch_stats_defined={'true' if self.switch_stats_defined else 'false'}",
            "hota=unsupported",
        ]
        return "\n".join(lines) + "\n"

    def events_csv(self) -> str:
        lines = ["gt_id,start_frame,end_frame,duration,recovered"]
        for e in self.events:
            lines.append(f"{e.gt_identity},{e.start_frame},{e.end_frame},"
                         f"{e.duration},{'true' if e.recovered else 'false'}")
        return "\n".join(lines) + "\n"


def evaluate(gt: TrajectorySet, pred: TrajectorySet,
             tau_long: int = 10) -> EvalReport:
    """Full report: CLEAR + identity metrics + switch duration stats."""
    mota, fp, fn, idsw = clear_metrics(gt, pred)
    idtp, idfp, idfn, idf1 = id_metrics(gt, pred)
    count, mean, median, long_ratio, events = switch_duration_stats(
        gt, pred, tau_long)
    return EvalReport(
        mota=mota, idf1=idf1, fp=fp, fn=fn, idsw=idsw,
        idtp=idtp, idfp=idfp, idfn=idfn,
        switch_count=count, switch_mean=mean, switch_median=median,
        long_ratio=long_ratio,
        gt_boxes=gt.total_boxes(), pred_boxes=pred.total_boxes(),
        switch_stats_defined=count > 0,
        events=events,
    )
