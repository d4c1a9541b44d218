import itertools

import numpy as np
import pytest

from octrack.evaluation import (
    TrajectorySet,
    clear_metrics,
    evaluate,
    frame_match,
    id_metrics,
    switch_duration_stats,
)
from octrack.geometry import BoundingBox, iou


def box_at(x, y=0.0, w=10.0, h=10.0):
    return BoundingBox(x, y, w, h)


def traj(spec, role="ground-truth"):
    """Build a TrajectorySet from {identity: {frame: box}}."""
    t = TrajectorySet(role=role)
    for ident, timeline in spec.items():
        for frame, box in timeline.items():
            t.add(ident, frame, box)
    return t


def single_lane(ident, frames, x=0.0):
    return {ident: {f: box_at(x) for f in frames}}


def mid_swap_sequences():
    """One GT identity over 10 frames; the tracker's id flips at frame 6.

    All boxes are pixel-perfect, so the only errors are identity errors:
    frame 6 is the single IDSW; FP = FN = 0, hence MOTA = 1 - 1/10 = 0.9.
    For identity metrics, either prediction trajectory can be paired with
    the GT but not both, leaving 5 matched frames whichever is chosen:
    IDTP 5, IDFP 5, IDFN 5, IDF1 = 2*5 / (2*5 + 5 + 5) = 0.5.
    """
    gt = traj(single_lane(1, range(1, 11)))
    pred = traj({
        1: {f: box_at(0) for f in range(1, 6)},
        2: {f: box_at(0) for f in range(6, 11)},
    }, role="prediction")
    return gt, pred


def id_metrics_oracle(gt, pred, iou_threshold=0.5):
    """Exhaustive search over all injective GT->prediction pairings."""
    gt_ids, pred_ids = gt.identities(), pred.identities()

    def hits(g, p):
        return sum(1 for f, b in gt.boxes[g].items()
                   if f in pred.boxes[p] and iou(b, pred.boxes[p][f]) >= iou_threshold)

    best = 0
    for k in range(0, min(len(gt_ids), len(pred_ids)) + 1):
        for chosen in itertools.combinations(gt_ids, k):
            for assigned in itertools.permutations(pred_ids, k):
                best = max(best, sum(hits(g, p) for g, p in zip(chosen, assigned)))
    idtp = best
    idfn = gt.total_boxes() - idtp
    idfp = pred.total_boxes() - idtp
    denom = 2 * idtp + idfp + idfn
    return idtp, idfp, idfn, (2 * idtp / denom if denom else 1.0)


class TestFrameMatch:
    def test_carry_preserved_while_overlapping(self):
        gt_boxes = {1: box_at(0)}
        # a competing prediction overlaps slightly better, but the carried
        # correspondence wins as long as it clears the threshold
        preds = {7: box_at(1), 8: box_at(0)}
        out = frame_match(gt_boxes, preds, carry={1: 7})
        assert out == {1: 7}

    def test_carry_dropped_when_overlap_breaks(self):
        out = frame_match({1: box_at(0)}, {7: box_at(300), 8: box_at(0)},
                          carry={1: 7})
        assert out == {1: 8}

    def test_hungarian_fallback_prefers_best_iou(self):
        gt_boxes = {1: box_at(0), 2: box_at(100)}
        preds = {5: box_at(99), 6: box_at(1)}
        out = frame_match(gt_boxes, preds)
        assert out == {1: 6, 2: 5}

    def test_no_match_below_threshold(self):
        assert frame_match({1: box_at(0)}, {5: box_at(9.5)}) == {}


class TestClearMetrics:
    def test_perfect_tracking(self):
        gt = traj(single_lane(1, range(1, 6)))
        mota, fp, fn, idsw = clear_metrics(gt, traj(single_lane(9, range(1, 6)),
                                                    role="prediction"))
        assert (mota, fp, fn, idsw) == (1.0, 0, 0, 0)

    def test_mid_swap_micro_sequence(self):
        gt, pred = mid_swap_sequences()
        mota, fp, fn, idsw = clear_metrics(gt, pred)
        assert idsw == 1
        assert fp == 0 and fn == 0
        assert mota == pytest.approx(0.9)

    def test_no_predictions(self):
        gt = traj(single_lane(1, range(1, 6)))
        mota, fp, fn, idsw = clear_metrics(gt, TrajectorySet(role="prediction"))
        assert mota == 0.0 and fn == 5

    def test_empty_gt_is_error(self):
        with pytest.raises(ValueError):
            clear_metrics(TrajectorySet(), TrajectorySet(role="prediction"))


class TestIdMetrics:
    def test_mid_swap_micro_sequence(self):
        gt, pred = mid_swap_sequences()
        assert id_metrics(gt, pred) == (5, 5, 5, pytest.approx(0.5))

    def test_total_swap_from_frame_one_is_free(self):
        # two GT whose predictions are swapped from the very first frame:
        # the optimal global pairing simply crosses over, IDF1 stays 1.0
        gt = traj({1: {f: box_at(0) for f in range(1, 6)},
                   2: {f: box_at(100) for f in range(1, 6)}})
        pred = traj({8: {f: box_at(100) for f in range(1, 6)},
                     9: {f: box_at(0) for f in range(1, 6)}}, role="prediction")
        idtp, idfp, idfn, idf1 = id_metrics(gt, pred)
        assert (idfp, idfn, idf1) == (0, 0, 1.0)

    def test_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(77)
        for _ in range(60):
            n_gt = int(rng.integers(1, 6))
            n_pred = int(rng.integers(0, 6))
            lanes = [float(x) for x in rng.uniform(0, 300, size=5)]
            gt = TrajectorySet()
            for g in range(1, n_gt + 1):
                start = int(rng.integers(1, 5))
                for f in range(start, start + int(rng.integers(1, 8))):
                    gt.add(g, f, box_at(lanes[g - 1], y=0))
            pred = TrajectorySet(role="prediction")
            for p in range(1, n_pred + 1):
                lane = lanes[int(rng.integers(0, 5))] + float(rng.uniform(-2, 2))
                start = int(rng.integers(1, 8))
                for f in range(start, start + int(rng.integers(1, 8))):
                    pred.add(p, f, box_at(lane, y=0))
            assert id_metrics(gt, pred) == pytest.approx(
                id_metrics_oracle(gt, pred))


class TestSwitchDuration:
    def test_perfect_tracking_zero_events(self):
        gt = traj(single_lane(1, range(1, 6)))
        pred = traj(single_lane(3, range(1, 6)), role="prediction")
        assert switch_duration_stats(gt, pred) == (0, 0.0, 0.0, 0.0, [])

    def test_single_recovered_swap(self):
        # 12 frames: right id, 4 wrong frames, right id again
        gt = traj(single_lane(1, range(1, 13)))
        pred = traj({
            1: {f: box_at(0) for f in [*range(1, 5), *range(9, 13)]},
            2: {f: box_at(0) for f in range(5, 9)},
        }, role="prediction")
        count, mean, median, long_ratio, events = switch_duration_stats(gt, pred)
        assert (count, mean, median, long_ratio) == (1, 4.0, 4.0, 0.0)
        e = events[0]
        assert (e.start_frame, e.end_frame, e.duration, e.recovered) == (5, 8, 4, True)

    def test_two_events_short_and_long(self):
        # 3-frame recovered swap, then a 15-frame swap running to the end
        gt = traj(single_lane(1, range(1, 22)))
        pred = traj({
            1: {f: box_at(0) for f in [1, 2, 6]},
            2: {f: box_at(0) for f in range(3, 6)},
            3: {f: box_at(0) for f in range(7, 22)},
        }, role="prediction")
        count, mean, median, long_ratio, events = switch_duration_stats(gt, pred)
        assert (count, mean, median) == (2, 9.0, 9.0)
        assert long_ratio == pytest.approx(50.0)
        assert [e.duration for e in events] == [3, 15]
        assert [e.recovered for e in events] == [True, False]

    def test_unmatched_frames_pause_the_event(self):
        # wrong id, a gap with no prediction, wrong id again: one event
        # whose span counts the gap frames
        gt = traj(single_lane(1, range(1, 9)))
        pred = traj({
            1: {1: box_at(0), 2: box_at(0)},
            2: {3: box_at(0), 6: box_at(0)},
        }, role="prediction")
        count, mean, _, _, events = switch_duration_stats(gt, pred)
        assert count == 1
        assert (events[0].start_frame, events[0].end_frame) == (3, 6)
        assert events[0].duration == 4

    def test_bad_tau_long(self):
        gt = traj(single_lane(1, [1]))
        with pytest.raises(ValueError):
            switch_duration_stats(gt, TrajectorySet(role="prediction"), tau_long=0)


class TestEvaluateReport:
    def test_report_text_and_csv(self):
        gt, pred = mid_swap_sequences()
        report = evaluate(gt, pred)
        text = report.to_text()
        assert "mota=0.900000" in text
        assert "idf1=0.500000" in text
        assert "hota=unsupported" in text
        assert "switch_stats_defined=true" in text
        csv = report.events_csv()
        assert csv.splitlines()[0] == "gt_id,start_frame,end_frame,duration,recovered"
        assert len(csv.splitlines()) == 1 + report.switch_count

    def test_duplicate_box_rejected(self):
        t = TrajectorySet()
        t.add(1, 1, box_at(0))
        with pytest.raises(ValueError):
            t.add(1, 1, box_at(5))
