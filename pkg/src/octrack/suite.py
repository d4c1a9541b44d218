"""Seeded verification suites: fixed scenario sets, paired baseline vs
corrected runs, and suite-level aggregates.

The crossing suite (100 scenarios, 2-6 agents, at least one forced
crossing each, occlusion blend >= 0.5) is the substrate for the
directional checks: enabling correction must shorten identity-switch
durations without giving up IDF1.
"""
from __future__ import annotations

import statistics
from dataclasses import dataclass, field

from .config import TrackerConfig
from .evaluation import EvalReport, evaluate
from .mot_io import results_text, results_to_trajectories
from .pipeline import run_pipeline
from .synth import ScenarioSpec, crossing_scenario, generate, no_overlap_scenario

CROSSING_SUITE_SIZE = 100
NO_OVERLAP_SUITE_SIZE = 50
DEFAULT_MASTER_SEED = 20240811
TAU_LONG = 10


def build_crossing_suite(n: int = CROSSING_SUITE_SIZE,
                         master_seed: int = DEFAULT_MASTER_SEED) -> list[ScenarioSpec]:
    """The fixed crossing-scenario suite, fully determined by master_seed."""
    specs = []
    blends = [0.65, 0.7, 0.75, 0.8]
    for i in range(n):
        n_agents = 2 + (i % 5)            # cycles 2..6
        n_crossings = 2 if n_agents >= 5 and i % 2 == 0 else 1
        specs.append(crossing_scenario(
            seed=master_seed + i,
            n_agents=n_agents,
            n_frames=100,
            n_crossings=n_crossings,
            occlusion_blend=blends[i % len(blends)],
            bounce_prob=0.7,
        ))
    return specs


def build_no_overlap_suite(n: int = NO_OVERLAP_SUITE_SIZE,
                           master_seed: int = DEFAULT_MASTER_SEED) -> list[ScenarioSpec]:
    return [no_overlap_scenario(seed=master_seed + 5000 + i, n_agents=2 + (i % 4))
            for i in range(n)]


def run_scenario(spec: ScenarioSpec, config: TrackerConfig):
    """Generate, track, and evaluate one scenario.

    Returns (result_text, EvalReport).
    """
    bundle = generate(spec)
    rows = run_pipeline(bundle.detections, config, n_frames=spec.n_frames)
    text = results_text(rows)
    report = evaluate(bundle.gt, results_to_trajectories(rows), tau_long=TAU_LONG)
    return text, report


@dataclass
class SuiteAggregate:
    """Suite-pooled metrics: identity counts are summed, switch statistics
    are pooled over all events of all scenarios."""

    n_scenarios: int = 0
    idtp: int = 0
    idfp: int = 0
    idfn: int = 0
    fp: int = 0
    fn: int = 0
    idsw: int = 0
    gt_boxes: int = 0
    durations: list[int] = field(default_factory=list)

    def add(self, report: EvalReport):
        self.n_scenarios += 1
        self.idtp += report.idtp
        self.idfp += report.idfp
        self.idfn += report.idfn
        self.fp += report.fp
        self.fn += report.fn
        self.idsw += report.idsw
        self.gt_boxes += report.gt_boxes
        self.durations.extend(e.duration for e in report.events)

    @property
    def idf1(self) -> float:
        denom = 2 * self.idtp + self.idfp + self.idfn
        return 2 * self.idtp / denom if denom else 1.0

    @property
    def mota(self) -> float:
        return 1.0 - (self.fp + self.fn + self.idsw) / self.gt_boxes

    @property
    def switch_count(self) -> int:
        return len(self.durations)

    @property
    def switch_mean(self) -> float:
        return statistics.fmean(self.durations) if self.durations else 0.0

    @property
    def switch_median(self) -> float:
        return float(statistics.median(self.durations)) if self.durations else 0.0

    @property
    def long_ratio(self) -> float:
        if not self.durations:
            return 0.0
        return 100.0 * sum(1 for d in self.durations if d > TAU_LONG) / len(self.durations)

    def summary_lines(self, label: str) -> list[str]:
        return [
            f"{label}.idf1={self.idf1:.6f}",
            f"{label}.mota={self.mota:.6f}",
            f"{label}.switch_count={self.switch_count}",
            f"{label}.switch_mean={self.switch_mean:.6f}",
            f"{label}.switch_median={self.switch_median:.6f}",
            f"{label}.long_ratio={self.long_ratio:.6f}",
            f"{label}.idtp={self.idtp}",
            f"{label}.idfp={self.idfp}",
            f"{label}.idfn={self.idfn}",
        ]


def run_suite_comparison(specs: list[ScenarioSpec], corrected: TrackerConfig,
                         baseline: TrackerConfig):
    """Paired runs over a suite; returns (corrected_agg, baseline_agg)."""
    agg_c, agg_b = SuiteAggregate(), SuiteAggregate()
    for spec in specs:
        _, rep_c = run_scenario(spec, corrected)
        _, rep_b = run_scenario(spec, baseline)
        agg_c.add(rep_c)
        agg_b.add(rep_b)
    return agg_c, agg_b


@dataclass
class SuiteCheck:
    name: str
    passed: bool
    detail: str


def run_acceptance_suite(config: TrackerConfig | None = None,
                         master_seed: int = DEFAULT_MASTER_SEED):
    """The seeded acceptance suite behind the `suite` CLI command.

    Checks, on the fixed scenario sets:
      - no-op: correction leaves no-overlap scenarios byte-identical
      - directional effect: pooled switch-duration mean down >= 10%
        relative, long ratio down absolutely, IDF1 within 0.002
      - determinism: re-running a scenario reproduces identical text

    Returns (checks, corrected_agg, baseline_agg, report_lines).
    """
    config = config or TrackerConfig()
    baseline = config.with_overrides(correction_stage1=False,
                                     correction_stage2=False)
    checks: list[SuiteCheck] = []

    noop_ok = True
    for spec in build_no_overlap_suite(master_seed=master_seed):
        text_c, _ = run_scenario(spec, config)
        text_b, _ = run_scenario(spec, baseline)
        if text_c != text_b:
            noop_ok = False
            break
    checks.append(SuiteCheck(
        "correction_noop_without_overlap", noop_ok,
        "enabled vs disabled correction on no-overlap scenarios"))

    specs = build_crossing_suite(master_seed=master_seed)
    agg_c, agg_b = run_suite_comparison(specs, config, baseline)

    mean_ok = (agg_b.switch_mean > 0
               and agg_c.switch_mean <= 0.9 * agg_b.switch_mean)
    checks.append(SuiteCheck(
        "switch_mean_reduced_10pct", mean_ok,
        f"mean {agg_b.switch_mean:.3f} -> {agg_c.switch_mean:.3f}"))
    long_ok = agg_c.long_ratio < agg_b.long_ratio
    checks.append(SuiteCheck(
        "long_ratio_reduced", long_ok,
        f"long ratio {agg_b.long_ratio:.3f}% -> {agg_c.long_ratio:.3f}%"))
    idf1_ok = agg_c.idf1 >= agg_b.idf1 - 0.002
    checks.append(SuiteCheck(
        "idf1_not_degraded", idf1_ok,
        f"idf1 {agg_b.idf1:.6f} -> {agg_c.idf1:.6f}"))

    probe = specs[0]
    text1, _ = run_scenario(probe, config)
    text2, _ = run_scenario(probe, config)
    checks.append(SuiteCheck("determinism", text1 == text2,
                             "repeated run of scenario 0 byte-identical"))

    lines = [f"suite_master_seed={master_seed}",
             f"crossing_scenarios={len(specs)}"]
    lines += agg_b.summary_lines("baseline")
    lines += agg_c.summary_lines("corrected")
    for c in checks:
        lines.append(f"check.{c.name}={'pass' if c.passed else 'FAIL'} ({c.detail})")
    return checks, agg_c, agg_b, lines
