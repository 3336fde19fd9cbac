"""Measurements are derived from the event record, never tallied on the side.

Anything the reports claim can therefore be re-derived from a stored event
log and must come out identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .events import EventKind, SimEvent

SCENARIO_LABELS = {
    "DIRECT": "DIRECT",
    "EMPTY_CACHE": "CACHE EMPTY",
    "FULL_CACHE": "CACHE FULL",
    "PREFETCH": "PREFETCHER",
    "DISTRIBUTED_PREFETCH": "DISTRIBUTED",
}


@dataclass
class RunMetrics:
    scenario: str = ""
    run_index: int = 0
    seed: int = 0
    cache_order: list[str] = field(default_factory=list)
    total_requests: int = 0
    hits: int = 0
    misses: int = 0
    per_cache: dict[str, list[int]] = field(default_factory=dict)  # id -> [hits, misses]
    requested_layers: dict[str, set[int]] = field(default_factory=dict)
    ctrl_ms: list[float] = field(default_factory=list)
    chunk_ms: list[float] = field(default_factory=list)
    mpd_ms: float | None = None
    first_hit_ms: float | None = None
    prefetch_idle_ms: float | None = None
    prefetch_done: int = 0
    video_end_ms: float | None = None

    @property
    def hit_ratio_pct(self) -> float:
        served = self.hits + self.misses
        return 100.0 * self.hits / served if served else 0.0

    def cache_ratio_pct(self, cache_id: str) -> float:
        hits, misses = self.per_cache.get(cache_id, [0, 0])
        return 100.0 * hits / (hits + misses) if hits + misses else 0.0


def derive_run_metrics(records: list[SimEvent]) -> RunMetrics:
    metrics = RunMetrics()
    for event in records:
        payload = event.payload
        if event.kind is EventKind.RUN_START:
            metrics.scenario = payload["scenario"]
            metrics.run_index = payload["run"]
            metrics.seed = payload["seed"]
            metrics.cache_order = list(payload["cache_order"])
        elif event.kind is EventKind.CLIENT_REQUEST:
            metrics.total_requests += 1
        elif event.kind is EventKind.CACHE_SERVE:
            layer = payload.get("repr")
            if layer is not None:
                metrics.requested_layers.setdefault(payload["cache"], set()).add(layer)
            if payload["requester"] != "client":
                continue
            bucket = metrics.per_cache.setdefault(payload["cache"], [0, 0])
            if payload["result"] == "HIT":
                metrics.hits += 1
                bucket[0] += 1
                if metrics.first_hit_ms is None:
                    metrics.first_hit_ms = event.time_ms
            else:
                metrics.misses += 1
                bucket[1] += 1
        elif event.kind is EventKind.CTRL_RESPONSE:
            metrics.ctrl_ms.append(payload["elapsed_ms"])
        elif event.kind is EventKind.CHUNK_DONE:
            metrics.chunk_ms.append(payload["elapsed_ms"])
        elif event.kind is EventKind.MPD_RETRIEVED:
            metrics.mpd_ms = payload["elapsed_ms"]
        elif event.kind is EventKind.PREFETCH_DONE:
            metrics.prefetch_done += 1
        elif event.kind is EventKind.PREFETCH_IDLE:
            metrics.prefetch_idle_ms = event.time_ms
        elif event.kind is EventKind.RUN_END:
            metrics.video_end_ms = payload["video_end_ms"]
    return metrics


# -- aggregation ----------------------------------------------------------------


def mean(values: list[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def stdev(values: list[float]) -> float:
    """Sample standard deviation; a single observation has none."""
    if len(values) < 2:
        return 0.0
    mu = mean(values)
    return math.sqrt(sum((v - mu) ** 2 for v in values) / (len(values) - 1))


def spread(values: list[float]) -> tuple[float, float, float, float]:
    if not values:
        return (0.0, 0.0, 0.0, 0.0)
    return (mean(values), stdev(values), min(values), max(values))


@dataclass
class ScenarioReport:
    kind: str
    runs: list[RunMetrics]

    @property
    def label(self) -> str:
        return SCENARIO_LABELS.get(self.kind, self.kind)

    @property
    def cache_order(self) -> list[str]:
        return self.runs[0].cache_order if self.runs else []

    def ratios(self) -> list[float]:
        return [run.hit_ratio_pct for run in self.runs]

    def ctrl_seconds(self) -> list[float]:
        return [value / 1000.0 for run in self.runs for value in run.ctrl_ms]

    def chunk_seconds(self) -> list[float]:
        return [value / 1000.0 for run in self.runs for value in run.chunk_ms]


def csv_report(report: ScenarioReport) -> str:
    """One row per run; distributed runs break the ratio down per cache."""
    order = report.cache_order
    distributed = report.kind == "DISTRIBUTED_PREFETCH" and len(order) > 1
    header = ["case", "total", "hit", "miss", "hit_ratio"]
    aliases = {cache_id: f"c{i + 1}" for i, cache_id in enumerate(order)}
    if distributed:
        for cache_id in reversed(order):
            alias = aliases[cache_id]
            header += [f"hit_{alias}", f"miss_{alias}", f"ratio_{alias}"]
    lines = [",".join(header)]
    for run in report.runs:
        row = [
            f"{run.run_index + 1:02d}",
            str(run.total_requests),
            str(run.hits),
            str(run.misses),
            f"{run.hit_ratio_pct:.4f}",
        ]
        if distributed:
            for cache_id in reversed(order):
                hits, misses = run.per_cache.get(cache_id, [0, 0])
                row += [str(hits), str(misses), f"{run.cache_ratio_pct(cache_id):.4f}"]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _stat_row(label: str, values: list[float], fmt: str) -> str:
    mu, sigma, lo, hi = spread(values)
    return f"{label:<14}{mu:{fmt}}  {sigma:{fmt}}  {lo:{fmt}}  {hi:{fmt}}"


def text_summary(report: ScenarioReport) -> str:
    lines = [
        f"scenario: {report.label}",
        f"runs: {len(report.runs)}",
        f"requests per run: {report.runs[0].total_requests if report.runs else 0}",
        _stat_row("hit ratio %", report.ratios(), "10.4f"),
        _stat_row("ctrl resp s", report.ctrl_seconds(), "10.4f"),
        _stat_row("chunk time s", report.chunk_seconds(), "10.4f"),
    ]
    order = report.cache_order
    if report.kind == "DISTRIBUTED_PREFETCH" and len(order) > 1:
        for cache_id in reversed(order):
            values = [run.cache_ratio_pct(cache_id) for run in report.runs]
            lines.append(_stat_row(f"  {cache_id}", values, "10.4f"))
    return "\n".join(lines) + "\n"


def suite_summary(reports: list[ScenarioReport]) -> str:
    """Side-by-side table over every scenario in the suite."""
    header = f"{'':<14}{'mean':>10}  {'stdev':>10}  {'min':>10}  {'max':>10}"
    sections = [
        ("control response time (s)", lambda r: r.ctrl_seconds(), "10.4f"),
        ("client hit ratio (%)", lambda r: r.ratios(), "10.4f"),
        ("chunk download time (s)", lambda r: r.chunk_seconds(), "10.4f"),
    ]
    blocks = []
    for title, extract, fmt in sections:
        lines = [title, header]
        for report in reports:
            values = extract(report)
            if title.startswith("control") and not values:
                continue  # nothing consults the controller in a DIRECT run
            lines.append(_stat_row(report.label, values, fmt))
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"
