"""File I/O: MOT-convention detection/result/ground-truth text files and
the embedding sidecar formats.

Detection and result lines are `frame,id,left,top,width,height,conf,-1,-1,-1`
with id = -1 for raw detections. Embeddings travel in a sidecar keyed by
(frame, 0-based detection ordinal): either a text CSV
`frame,det_index,v1,...,vD` or a packed little-endian binary with an
8-byte header (magic "FCEMB01" + D as an unsigned byte) followed by
records of frame and det_index as uint32 plus D float32 components.
"""
from __future__ import annotations

import struct
from collections import defaultdict

import numpy as np

from .evaluation import TrajectorySet
from .geometry import BoundingBox
from .tracker import Detection

EMB_MAGIC = b"FCEMB01"


class ParseError(ValueError):
    """Malformed input file; message carries the offending location."""


def _parse_mot_line(line: str, path, lineno: int):
    parts = line.strip().split(",")
    if len(parts) < 7:
        raise ParseError(f"{path}:{lineno}: expected >= 7 fields, got {len(parts)}")
    try:
        frame = int(float(parts[0]))
        ident = int(float(parts[1]))
        left, top, width, height = (float(p) for p in parts[2:6])
        conf = float(parts[6])
    except ValueError as exc:
        raise ParseError(f"{path}:{lineno}: malformed number: {line.strip()!r}") from exc
    try:
        box = BoundingBox(left, top, width, height)
    except ValueError as exc:
        raise ParseError(f"{path}:{lineno}: {exc}") from exc
    return frame, ident, box, conf


def read_mot_rows(path):
    """All (frame, id, box, conf) rows of a MOT-format file."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            rows.append(_parse_mot_line(line, path, lineno))
    return rows


def read_trajectories(path, role="ground-truth") -> TrajectorySet:
    """Load a ground-truth or result file into per-identity timelines.

    Rows with id <= 0 (raw detections) are rejected.
    """
    traj = TrajectorySet(role=role)
    for frame, ident, box, _conf in read_mot_rows(path):
        if ident <= 0:
            raise ParseError(f"{path}: trajectory file contains id {ident}; "
                             "expected positive identities")
        traj.add(ident, frame, box)
    return traj


def read_embeddings_csv(path):
    """dict (frame, det_index) -> feature array from the text sidecar."""
    table = {}
    dim = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.strip().split(",")
            if len(parts) < 3:
                raise ParseError(f"{path}:{lineno}: expected frame,det_index,v1,...")
            try:
                frame = int(parts[0])
                det_index = int(parts[1])
                values = np.array([float(p) for p in parts[2:]], dtype=np.float64)
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: malformed number") from exc
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise ParseError(
                    f"{path}:{lineno}: dimension mismatch ({len(values)} vs {dim})")
            table[(frame, det_index)] = values
    return table


def write_embeddings_csv(table, path):
    with open(path, "w", encoding="utf-8") as fh:
        for (frame, det_index) in sorted(table):
            values = table[(frame, det_index)]
            vals = ",".join(f"{v:.8f}" for v in values)
            fh.write(f"{frame},{det_index},{vals}\n")


def read_embeddings_binary(path):
    """dict (frame, det_index) -> feature array from the packed sidecar."""
    table = {}
    with open(path, "rb") as fh:
        header = fh.read(8)
        if len(header) != 8 or header[:7] != EMB_MAGIC:
            raise ParseError(f"{path}: bad embedding header")
        dim = header[7]
        record = struct.Struct(f"<II{dim}f")
        while True:
            chunk = fh.read(record.size)
            if not chunk:
                break
            if len(chunk) != record.size:
                raise ParseError(f"{path}: truncated embedding record")
            values = record.unpack(chunk)
            frame, det_index = values[0], values[1]
            table[(frame, det_index)] = np.array(values[2:], dtype=np.float64)
    return table


def write_embeddings_binary(table, path, dim):
    if not (0 < dim <= 255):
        raise ValueError(f"binary sidecar supports 1..255 dimensions, got {dim}")
    record = struct.Struct(f"<II{dim}f")
    with open(path, "wb") as fh:
        fh.write(EMB_MAGIC + bytes([dim]))
        for (frame, det_index) in sorted(table):
            values = table[(frame, det_index)]
            if len(values) != dim:
                raise ValueError(f"embedding ({frame},{det_index}) has wrong dimension")
            fh.write(record.pack(frame, det_index, *values))


def read_embeddings(path):
    with open(path, "rb") as fh:
        head = fh.read(7)
    if head == EMB_MAGIC:
        return read_embeddings_binary(path)
    return read_embeddings_csv(path)


def read_detections(path, embedding_path) -> dict[int, list[Detection]]:
    """Per-frame detections with embeddings joined by (frame, ordinal)."""
    embeddings = read_embeddings(embedding_path)
    dims = {len(v) for v in embeddings.values()}
    if len(dims) > 1:
        raise ParseError(f"{embedding_path}: inconsistent embedding dimensions {dims}")

    per_frame: dict[int, list[Detection]] = defaultdict(list)
    ordinals: dict[int, int] = defaultdict(int)
    for frame, ident, box, conf in read_mot_rows(path):
        del ident  # raw detections carry id -1; ignored either way
        idx = ordinals[frame]
        ordinals[frame] += 1
        key = (frame, idx)
        if key not in embeddings:
            raise ParseError(
                f"{path}: no embedding for detection (frame={frame}, index={idx})")
        per_frame[frame].append(Detection(
            frame=frame, box=box, confidence=min(max(conf, 0.0), 1.0),
            feature=embeddings[key], source_index=idx))
    return dict(per_frame)


def write_detections(per_frame, path):
    """Raw detection lines (id -1), sorted by frame and ordinal."""
    with open(path, "w", encoding="utf-8") as fh:
        for frame in sorted(per_frame):
            for det in per_frame[frame]:
                b = det.box
                fh.write(f"{frame},-1,{b.left:.2f},{b.top:.2f},{b.width:.2f},"
                         f"{b.height:.2f},{det.confidence:.2f},-1,-1,-1\n")


def results_text(tracks) -> str:
    """Result lines sorted by (frame, id) with fixed 2-decimal boxes.

    `tracks` is an iterable of (frame, id, box, conf).
    """
    rows = sorted(tracks, key=lambda r: (r[0], r[1]))
    out = []
    for frame, ident, box, conf in rows:
        out.append(f"{frame},{ident},{box.left:.2f},{box.top:.2f},"
                   f"{box.width:.2f},{box.height:.2f},{conf:.2f},-1,-1,-1\n")
    return "".join(out)


def write_results(tracks, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(results_text(tracks))


def results_to_trajectories(tracks) -> TrajectorySet:
    """In-memory counterpart of write_results + read_trajectories.

    Boxes are rounded to 2 decimals so in-memory evaluation matches
    evaluation of a written result file bit for bit.
    """
    traj = TrajectorySet(role="prediction")
    for frame, ident, box, _conf in tracks:
        rounded = BoundingBox(round(box.left, 2), round(box.top, 2),
                              round(box.width, 2), round(box.height, 2))
        traj.add(ident, frame, rounded)
    return traj
