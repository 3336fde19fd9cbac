"""Run scenarios end to end and leave auditable artifacts behind.

Every run writes (optionally) an event log; the CSV and summaries are
derived from exactly those events, so `report` on a stored log reproduces
them byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .events import SimEvent, write_event_log
from .metrics import (
    RunMetrics,
    ScenarioReport,
    csv_report,
    derive_run_metrics,
    suite_summary,
    text_summary,
)
from .runtime import SimWorld
from .scenario import ScenarioConfig, ScenarioKind


@dataclass
class ScenarioResult:
    report: ScenarioReport
    event_log_paths: list[Path] = field(default_factory=list)
    csv_path: Path | None = None
    summary_path: Path | None = None
    records: list[list[SimEvent]] | None = None


def run_single(
    config: ScenarioConfig,
    kind: ScenarioKind,
    run_index: int,
    seed: int,
    max_time_ms: float | None = None,
) -> list[SimEvent]:
    world = SimWorld(config, kind, run_index, seed)
    return world.execute(max_time_ms)


def run_scenario(
    config: ScenarioConfig,
    kind: ScenarioKind | None = None,
    out_dir: Path | None = None,
    keep_records: bool = False,
    max_time_ms: float | None = None,
) -> ScenarioResult:
    kind = kind or config.kind
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
    result = ScenarioResult(ScenarioReport(kind.value, []), records=[] if keep_records else None)
    stem = kind.value.lower()
    for index, seed in enumerate(config.seeds):
        records = run_single(config, kind, index, seed, max_time_ms)
        result.report.runs.append(derive_run_metrics(records))
        if out_dir is not None:
            log_path = out_dir / f"{stem}_{index + 1:02d}.events"
            write_event_log(records, log_path)
            result.event_log_paths.append(log_path)
        if keep_records:
            result.records.append(records)
    if out_dir is not None:
        result.csv_path = out_dir / f"{stem}.csv"
        result.csv_path.write_text(csv_report(result.report), encoding="utf-8")
        result.summary_path = out_dir / f"{stem}_summary.txt"
        result.summary_path.write_text(text_summary(result.report), encoding="utf-8")
    return result


def run_suite(
    config: ScenarioConfig,
    kinds: list[ScenarioKind] | None = None,
    out_dir: Path | None = None,
) -> dict[ScenarioKind, ScenarioResult]:
    """All scenarios over the same seed list, plus a side-by-side summary."""
    kinds = kinds or list(ScenarioKind)
    results = {kind: run_scenario(config, kind, out_dir=out_dir) for kind in kinds}
    if out_dir is not None:
        summary = suite_summary([results[kind].report for kind in kinds])
        (Path(out_dir) / "suite_summary.txt").write_text(summary, encoding="utf-8")
    return results


def report_from_logs(paths: list[Path]) -> ScenarioReport:
    """Rebuild a scenario report from stored event logs."""
    from .events import parse_event_line

    runs: list[RunMetrics] = []
    kind = ""
    for path in paths:
        records = [
            parse_event_line(line)
            for line in Path(path).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        metrics = derive_run_metrics(records)
        runs.append(metrics)
        kind = metrics.scenario or kind
    runs.sort(key=lambda m: m.run_index)
    return ScenarioReport(kind, runs)
