"""Synthetic occlusion-scenario generator.

Agents follow piecewise-linear waypoint paths at constant speed. A
crossing event drags the occluded agent's box onto the occluder's for a
plateau of frames, contaminates its appearance embedding toward the
occluder's identity anchor, and drops its detection confidence, which is
the failure mode the correction layer targets.

Determinism: everything derives from the scenario seed via
numpy SeedSequence spawning. The root sequence spawns two children,
one for per-agent identity anchors (spawned again per agent) and one for
per-frame observation noise (spawned again per frame). Within a frame,
draws happen in a fixed order per agent: miss flag, box jitter, confidence,
embedding noise, then one permutation for detection ordering.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .evaluation import TrajectorySet
from .geometry import BoundingBox, ioa
from .tracker import Detection


class GenerationError(ValueError):
    """Scenario spec cannot be realized; message names the culprit."""


@dataclass
class AgentSpec:
    width: float
    height: float
    waypoints: list[tuple[float, float]]
    speed: float

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise GenerationError("agent box extents must be positive")
        if len(self.waypoints) < 1:
            raise GenerationError("agent needs at least one waypoint")
        if self.speed < 0:
            raise GenerationError("agent speed must be >= 0")


@dataclass
class CrossingEvent:
    agent_a: int        # occluder, keeps its own path
    agent_b: int        # occluded, displaced onto agent_a
    start_frame: int
    end_frame: int

    @property
    def window(self) -> int:
        return self.end_frame - self.start_frame + 1


@dataclass
class DetectorNoise:
    box_jitter_std: float = 1.0
    miss_prob: float = 0.05
    conf_mean: float = 0.9
    conf_std: float = 0.03
    occluded_conf_mean: float = 0.45
    occluded_conf_std: float = 0.05

    def __post_init__(self):
        if not (0.0 <= self.miss_prob <= 1.0):
            raise GenerationError(f"miss_prob out of [0,1]: {self.miss_prob}")


@dataclass
class EmbeddingModel:
    dim: int = 128
    noise_std: float = 0.05
    occlusion_blend: float = 0.6

    def __post_init__(self):
        if self.dim < 2:
            raise GenerationError("embedding dim must be >= 2")
        if not (0.0 <= self.occlusion_blend <= 1.0):
            raise GenerationError(
                f"occlusion_blend out of [0,1]: {self.occlusion_blend}")


@dataclass
class ScenarioSpec:
    n_agents: int
    arena_width: float
    arena_height: float
    agents: list[AgentSpec]
    crossings: list[CrossingEvent]
    detector_noise: DetectorNoise
    embedding_model: EmbeddingModel
    n_frames: int
    seed: int

    def __post_init__(self):
        if self.n_agents != len(self.agents):
            raise GenerationError("n_agents does not match agent list")
        if self.n_frames < 1:
            raise GenerationError("n_frames must be >= 1")
        for k, ev in enumerate(self.crossings):
            name = f"crossing {k} ({ev.agent_a}->{ev.agent_b})"
            if ev.agent_a == ev.agent_b:
                raise GenerationError(f"{name}: agents must differ")
            for agent in (ev.agent_a, ev.agent_b):
                if not (0 <= agent < self.n_agents):
                    raise GenerationError(f"{name}: unknown agent {agent}")
            if not (1 <= ev.start_frame <= ev.end_frame <= self.n_frames):
                raise GenerationError(f"{name}: window outside [1, {self.n_frames}]")
            if ev.window < 5:
                raise GenerationError(
                    f"{name}: window of {ev.window} frames cannot hold the "
                    "3-frame full-overlap plateau plus ramps")


@dataclass
class SequenceBundle:
    gt: TrajectorySet
    detections: dict[int, list[Detection]]
    meta: dict = field(default_factory=dict)


def _path_position(agent: AgentSpec, t: float) -> tuple[float, float]:
    """Position after travelling speed*t along the waypoint polyline."""
    pts = agent.waypoints
    if len(pts) == 1 or agent.speed == 0:
        return pts[0]
    remaining = agent.speed * t
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        seg = math.hypot(x1 - x0, y1 - y0)
        if remaining <= seg and seg > 0:
            u = remaining / seg
            return (x0 + u * (x1 - x0), y0 + u * (y1 - y0))
        remaining -= seg
    return pts[-1]


def _crossing_weight(ev: CrossingEvent, frame: int) -> float:
    """Displacement weight in [0,1]: short ramp up, then a 3+ frame plateau
    at full overlap that holds until the window end.

    The release is abrupt, as real occlusions are: the moment the occluder
    passes, the occluded box snaps back to its own path.
    """
    if not (ev.start_frame <= frame <= ev.end_frame):
        return 0.0
    length = ev.window
    ramp = max(1, min(3, length - 3))
    k = frame - ev.start_frame
    if k < ramp:
        return (k + 1) / (ramp + 1)
    return 1.0


def _clamp_center(cx, cy, w, h, arena_w, arena_h):
    cx = min(max(cx, w / 2.0), max(arena_w - w / 2.0, w / 2.0))
    cy = min(max(cy, h / 2.0), max(arena_h - h / 2.0, h / 2.0))
    return cx, cy


def _gt_boxes_for_frame(spec: ScenarioSpec, frame: int) -> list[BoundingBox]:
    """Ground-truth box per agent, crossing displacement applied."""
    centers = [_path_position(a, frame - 1) for a in spec.agents]
    for ev in spec.crossings:
        u = _crossing_weight(ev, frame)
        if u > 0.0:
            ax, ay = centers[ev.agent_a]
            bx, by = centers[ev.agent_b]
            centers[ev.agent_b] = (bx + u * (ax - bx), by + u * (ay - by))
    boxes = []
    for agent, (cx, cy) in zip(spec.agents, centers):
        cx, cy = _clamp_center(cx, cy, agent.width, agent.height,
                               spec.arena_width, spec.arena_height)
        boxes.append(BoundingBox(cx - agent.width / 2.0, cy - agent.height / 2.0,
                                 agent.width, agent.height))
    return boxes


def _occluded_agents(spec: ScenarioSpec, frame: int) -> dict[int, tuple[int, float]]:
    """Map occluded agent -> (occluder, displacement weight) for crossings
    active at this frame; the weight measures how deep in the occlusion the
    agent currently is."""
    active = {}
    for ev in spec.crossings:
        if ev.start_frame <= frame <= ev.end_frame:
            u = _crossing_weight(ev, frame)
            prev = active.get(ev.agent_b)
            if prev is None or u > prev[1]:
                active[ev.agent_b] = (ev.agent_a, u)
    return active


def _validate_crossing_overlap(spec: ScenarioSpec, gt_boxes_by_frame):
    """Every crossing must reach max directional IoA >= 0.8 for >= 3 frames."""
    for k, ev in enumerate(spec.crossings):
        run = best = 0
        for frame in range(ev.start_frame, ev.end_frame + 1):
            boxes = gt_boxes_by_frame[frame]
            a, b = boxes[ev.agent_a], boxes[ev.agent_b]
            if max(ioa(a, b), ioa(b, a)) >= 0.8:
                run += 1
                best = max(best, run)
            else:
                run = 0
        if best < 3:
            raise GenerationError(
                f"crossing {k} ({ev.agent_a}->{ev.agent_b}): overlap plateau "
                f"only {best} frames; boxes too dissimilar or window too tight")


def generate(spec: ScenarioSpec) -> SequenceBundle:
    """Render a scenario to ground truth plus noisy embedded detections."""
    root = np.random.SeedSequence(spec.seed)
    anchors_root, frames_root = root.spawn(2)

    dim = spec.embedding_model.dim
    anchors = []
    for child in anchors_root.spawn(spec.n_agents):
        rng = np.random.Generator(np.random.PCG64(child))
        v = rng.standard_normal(dim)
        anchors.append(v / np.linalg.norm(v))

    gt_boxes_by_frame = {f: _gt_boxes_for_frame(spec, f)
                         for f in range(1, spec.n_frames + 1)}
    _validate_crossing_overlap(spec, gt_boxes_by_frame)

    gt = TrajectorySet(role="ground-truth")
    detections: dict[int, list[Detection]] = {}
    noise = spec.detector_noise
    emb = spec.embedding_model
    frame_seqs = frames_root.spawn(spec.n_frames)

    for frame in range(1, spec.n_frames + 1):
        rng = np.random.Generator(np.random.PCG64(frame_seqs[frame - 1]))
        boxes = gt_boxes_by_frame[frame]
        occluded = _occluded_agents(spec, frame)
        for agent_idx, box in enumerate(boxes):
            gt.add(agent_idx + 1, frame, box)

        frame_dets = []
        for agent_idx, box in enumerate(boxes):
            # fixed draw order per agent keeps the stream stable even when
            # a detection is dropped
            miss = rng.random() < noise.miss_prob
            jitter = rng.normal(0.0, noise.box_jitter_std, size=4)
            conf_draw = rng.standard_normal()
            noise_vec = rng.normal(0.0, emb.noise_std, size=dim)
            if miss:
                continue
            w = max(box.width + jitter[2] * 0.5, 2.0)
            h = max(box.height + jitter[3] * 0.5, 2.0)
            det_box = BoundingBox(box.left + jitter[0], box.top + jitter[1], w, h)

            if agent_idx in occluded:
                other, depth = occluded[agent_idx]
                # contamination tracks occlusion depth; confidence collapses
                # once the agent is majority-occluded
                if depth >= 0.5:
                    conf = (noise.occluded_conf_mean
                            + conf_draw * noise.occluded_conf_std)
                else:
                    conf = noise.conf_mean + conf_draw * noise.conf_std
                blend = emb.occlusion_blend * depth
                raw = ((1.0 - blend) * anchors[agent_idx]
                       + blend * anchors[other] + noise_vec)
            else:
                conf = noise.conf_mean + conf_draw * noise.conf_std
                raw = anchors[agent_idx] + noise_vec
            feature = raw / np.linalg.norm(raw)
            conf = min(max(conf, 0.05), 1.0)
            frame_dets.append((agent_idx, det_box, conf, feature))

        order = rng.permutation(len(frame_dets))
        dets = []
        for ordinal, src in enumerate(order):
            _, det_box, conf, feature = frame_dets[src]
            dets.append(Detection(frame=frame, box=det_box, confidence=conf,
                                  feature=feature, source_index=ordinal))
        detections[frame] = dets

    meta = {"frame_rate": 30, "arena": (spec.arena_width, spec.arena_height),
            "dim": dim, "n_frames": spec.n_frames, "seed": spec.seed}
    return SequenceBundle(gt=gt, detections=detections, meta=meta)


# --- scenario builders -------------------------------------------------------

def crossing_scenario(seed: int, n_agents: int = 2, n_frames: int = 100,
                      arena: float = 600.0, n_crossings: int = 1,
                      occlusion_blend: float = 0.6,
                      bounce_prob: float = 0.5) -> ScenarioSpec:
    """Random scenario whose first 2*n_crossings agents meet at crossing
    points mid-sequence; remaining agents wander on straight paths.

    Each crossing agent pair passes through a shared point at the window
    center; the occluded agent either passes through or bounces back, the
    latter being the classic geometry for post-occlusion identity swaps.
    """
    if n_agents < 2 * n_crossings:
        raise GenerationError("not enough agents for the requested crossings")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0xC])))
    agents: list[AgentSpec] = [None] * n_agents
    crossings: list[CrossingEvent] = []

    margin = 80.0
    for k in range(n_crossings):
        ia, ib = 2 * k, 2 * k + 1
        cx = rng.uniform(margin + 60, arena - margin - 60)
        cy = rng.uniform(margin + 60, arena - margin - 60)
        t_mid = int(rng.integers(n_frames // 3, 2 * n_frames // 3))
        window = int(rng.integers(7, 12))
        start = max(1, t_mid - window // 2)
        end = min(n_frames, start + window - 1)

        base_w = rng.uniform(51.0, 66.0)
        theta_a = rng.uniform(0, 2 * math.pi)
        # approach directions separated enough that the pair actually crosses
        theta_b = theta_a + rng.uniform(0.6, 2.5)
        for idx, theta in ((ia, theta_a), (ib, theta_b)):
            speed = rng.uniform(2.0, 3.5)
            p0 = (cx - math.cos(theta) * speed * (t_mid - 1),
                  cy - math.sin(theta) * speed * (t_mid - 1))
            if idx == ib and rng.random() < bounce_prob:
                # bounce: reverse with a small deflection after the crossing
                phi = theta + math.pi + rng.uniform(-0.4, 0.4)
            else:
                phi = theta
            tail = speed * (n_frames - t_mid + 2)
            p2 = (cx + math.cos(phi) * tail, cy + math.sin(phi) * tail)
            w = base_w * rng.uniform(0.92, 1.08)
            h = w * rng.uniform(1.0, 1.15)
            agents[idx] = AgentSpec(width=w, height=h, waypoints=[p0, (cx, cy), p2],
                                    speed=speed)
        crossings.append(CrossingEvent(agent_a=ia, agent_b=ib,
                                       start_frame=start, end_frame=end))

    for idx in range(2 * n_crossings, n_agents):
        speed = rng.uniform(1.5, 3.0)
        p0 = (rng.uniform(margin, arena - margin), rng.uniform(margin, arena - margin))
        theta = rng.uniform(0, 2 * math.pi)
        p1 = (p0[0] + math.cos(theta) * speed * n_frames,
              p0[1] + math.sin(theta) * speed * n_frames)
        w = rng.uniform(32.0, 46.0)
        agents[idx] = AgentSpec(width=w, height=w * rng.uniform(1.0, 1.2),
                                waypoints=[p0, p1], speed=speed)

    return ScenarioSpec(
        n_agents=n_agents, arena_width=arena, arena_height=arena,
        agents=agents, crossings=crossings,
        # heavy box jitter makes occlusion-window assignment genuinely
        # ambiguous, which is the regime the correction layer targets
        detector_noise=DetectorNoise(box_jitter_std=3.0, occluded_conf_mean=0.45),
        embedding_model=EmbeddingModel(dim=32, occlusion_blend=occlusion_blend),
        n_frames=n_frames, seed=seed)


def no_overlap_scenario(seed: int, n_agents: int = 3,
                        n_frames: int = 60, arena: float = 600.0) -> ScenarioSpec:
    """Agents on well-separated horizontal lanes; no boxes ever overlap."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0x17])))
    agents = []
    lane_gap = arena / (n_agents + 1)
    for idx in range(n_agents):
        y = lane_gap * (idx + 1)
        speed = rng.uniform(1.0, 2.5)
        x0 = rng.uniform(60.0, 120.0)
        agents.append(AgentSpec(
            width=rng.uniform(28.0, 36.0), height=rng.uniform(30.0, 40.0),
            waypoints=[(x0, y), (x0 + speed * n_frames, y)], speed=speed))
    return ScenarioSpec(
        n_agents=n_agents, arena_width=arena + 400, arena_height=arena,
        agents=agents, crossings=[],
        detector_noise=DetectorNoise(box_jitter_std=0.6, miss_prob=0.02),
        embedding_model=EmbeddingModel(dim=32),
        n_frames=n_frames, seed=seed)


# --- spec (de)serialization --------------------------------------------------

def spec_to_json(spec: ScenarioSpec) -> str:
    return json.dumps(asdict(spec), indent=2)


def spec_from_json(text: str) -> ScenarioSpec:
    raw = json.loads(text)
    raw["agents"] = [AgentSpec(width=a["width"], height=a["height"],
                               waypoints=[tuple(p) for p in a["waypoints"]],
                               speed=a["speed"])
                     for a in raw["agents"]]
    raw["crossings"] = [CrossingEvent(**c) for c in raw["crossings"]]
    raw["detector_noise"] = DetectorNoise(**raw["detector_noise"])
    raw["embedding_model"] = EmbeddingModel(**raw["embedding_model"])
    return ScenarioSpec(**raw)
