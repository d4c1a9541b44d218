"""Per-sequence tracking pipeline: detections in, MOT result rows out."""
from __future__ import annotations

from .config import TrackerConfig
from .tracker import Tracker


def run_pipeline(detections_by_frame, config: TrackerConfig | None = None,
                 n_frames: int | None = None):
    """Track one sequence.

    Frames are processed in order over the full range (frames with no
    detections still advance prediction and lifecycle). Returns rows of
    (frame, track_id, box, confidence) for reported tracklets.
    """
    config = config or TrackerConfig()
    tracker = Tracker(config)
    if not detections_by_frame and n_frames is None:
        return []
    last = n_frames if n_frames is not None else max(detections_by_frame)
    first = 1
    rows = []
    for frame in range(first, last + 1):
        dets = detections_by_frame.get(frame, [])
        reported = tracker.step(frame, dets)
        for trk in reported:
            rows.append((frame, trk.id, trk.last_box, trk.last_confidence))
    return rows
