"""Evaluation report model and CSV/markdown rendering.

CSV rows carry metric values at full precision (shortest round-trip float
form) so downstream consumers can reproduce them bit for bit; the markdown
rendering shows DSC values scaled to percent with one decimal, the layout
used by reader-facing result tables. Undefined values appear as "-".
Renderers are pure: identical reports produce byte-identical files, and run
metadata belongs in a sidecar, never in the payload.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import ReportError

CSV_HEADER = (
    "patient", "scan", "organ", "pair",
    "surface_dsc", "tau_mm", "tau_quantized_mm", "volumetric_dsc",
    "overlap_area_1_mm2", "overlap_area_2_mm2",
    "total_area_1_mm2", "total_area_2_mm2",
    "volume_1_mm3", "volume_2_mm3", "flags",
)

# organ-column sentinel for per-patient aggregate rows; taxonomy names
# never collide with it
AGGREGATE_ORGAN = "AGGREGATE"


@dataclass(frozen=True)
class ReportRow:
    patient: str
    scan: str
    organ: str
    pair: str
    surface_dsc: float | None = None
    tau_mm: float | None = None
    tau_quantized_mm: float | None = None
    volumetric_dsc: float | None = None
    overlap_area_1_mm2: float | None = None
    overlap_area_2_mm2: float | None = None
    total_area_1_mm2: float | None = None
    total_area_2_mm2: float | None = None
    volume_1_mm3: float | None = None
    volume_2_mm3: float | None = None
    flags: tuple[str, ...] = ()

    def sort_key(self):
        return (self.patient, self.scan, self.organ, self.pair)


@dataclass(frozen=True)
class EvaluationReport:
    """Per-(patient, scan, organ, pair) metric rows plus per-patient
    aggregate rows (organ column ``AGGREGATE``)."""

    rows: tuple[ReportRow, ...] = ()
    aggregates: tuple[ReportRow, ...] = ()

    def sorted(self) -> "EvaluationReport":
        return EvaluationReport(
            rows=tuple(sorted(self.rows, key=ReportRow.sort_key)),
            aggregates=tuple(sorted(self.aggregates, key=ReportRow.sort_key)),
        )


def _cell(value: float | None) -> str:
    if value is None:
        return "-"
    if math.isinf(value):
        return "inf"
    return repr(float(value))


def _parse_cell(text: str, where: str) -> float | None:
    if text == "-":
        return None
    try:
        return float(text)
    except ValueError as exc:
        raise ReportError(f"{where}: bad numeric cell {text!r}") from exc


def render_csv(report: EvaluationReport) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    ordered = report.sorted()
    for row in (*ordered.rows, *ordered.aggregates):
        writer.writerow([
            row.patient, row.scan, row.organ, row.pair,
            _cell(row.surface_dsc), _cell(row.tau_mm), _cell(row.tau_quantized_mm),
            _cell(row.volumetric_dsc),
            _cell(row.overlap_area_1_mm2), _cell(row.overlap_area_2_mm2),
            _cell(row.total_area_1_mm2), _cell(row.total_area_2_mm2),
            _cell(row.volume_1_mm3), _cell(row.volume_2_mm3),
            ";".join(row.flags),
        ])
    return out.getvalue()


def read_report_csv(path) -> EvaluationReport:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ReportError(f"{path}: {exc}") from exc
    reader = csv.reader(io.StringIO(text))
    try:
        header = tuple(next(reader))
    except StopIteration:
        raise ReportError(f"{path}: empty file") from None
    if header != CSV_HEADER:
        raise ReportError(f"{path}: unexpected header {header!r}")
    rows = []
    aggregates = []
    for lineno, record in enumerate(reader, start=2):
        if not record:
            continue
        if len(record) != len(CSV_HEADER):
            raise ReportError(f"{path}:{lineno}: expected {len(CSV_HEADER)} cells, got {len(record)}")
        where = f"{path}:{lineno}"
        row = ReportRow(
            patient=record[0], scan=record[1], organ=record[2], pair=record[3],
            surface_dsc=_parse_cell(record[4], where),
            tau_mm=_parse_cell(record[5], where),
            tau_quantized_mm=_parse_cell(record[6], where),
            volumetric_dsc=_parse_cell(record[7], where),
            overlap_area_1_mm2=_parse_cell(record[8], where),
            overlap_area_2_mm2=_parse_cell(record[9], where),
            total_area_1_mm2=_parse_cell(record[10], where),
            total_area_2_mm2=_parse_cell(record[11], where),
            volume_1_mm3=_parse_cell(record[12], where),
            volume_2_mm3=_parse_cell(record[13], where),
            flags=tuple(record[14].split(";")) if record[14] else (),
        )
        (aggregates if row.organ == AGGREGATE_ORGAN else rows).append(row)
    return EvaluationReport(rows=tuple(rows), aggregates=tuple(aggregates))


def _pct(value: float | None) -> str:
    return "-" if value is None else f"{100.0 * value:.1f}"


def _mm(value: float | None) -> str:
    return "-" if value is None else f"{value:.1f}"


def _mean_std(values: list[float]) -> tuple[float, float] | None:
    if not values:
        return None
    n = len(values)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / n
    return mean, math.sqrt(var)


@dataclass(frozen=True)
class OrganSummary:
    organ: str
    n: int
    surface_dsc: tuple[float, float] | None
    volumetric_dsc: tuple[float, float] | None
    mean_surface_area_mm2: float | None
    mean_volume_mm3: float | None


def summarize_by_organ(report: EvaluationReport) -> tuple[OrganSummary, ...]:
    """Per-organ mean and population stddev across all metric rows, plus the
    mean surface area and volume (averaged over both sides of each pair)."""
    by_organ: dict[str, list[ReportRow]] = {}
    for row in report.rows:
        by_organ.setdefault(row.organ, []).append(row)
    summaries = []
    for organ in sorted(by_organ):
        rows = by_organ[organ]
        surf = [r.surface_dsc for r in rows if r.surface_dsc is not None]
        vol = [r.volumetric_dsc for r in rows if r.volumetric_dsc is not None]
        areas = [
            0.5 * (r.total_area_1_mm2 + r.total_area_2_mm2)
            for r in rows
            if r.total_area_1_mm2 is not None and r.total_area_2_mm2 is not None
        ]
        volumes = [
            0.5 * (r.volume_1_mm3 + r.volume_2_mm3)
            for r in rows
            if r.volume_1_mm3 is not None and r.volume_2_mm3 is not None
        ]
        summaries.append(OrganSummary(
            organ=organ,
            n=len(rows),
            surface_dsc=_mean_std(surf),
            volumetric_dsc=_mean_std(vol),
            mean_surface_area_mm2=sum(areas) / len(areas) if areas else None,
            mean_volume_mm3=sum(volumes) / len(volumes) if volumes else None,
        ))
    return tuple(summaries)


def _pct_pair(stats: tuple[float, float] | None) -> str:
    if stats is None:
        return "-"
    mean, std = stats
    return f"{100.0 * mean:.1f} ± {100.0 * std:.1f}"


def render_markdown(report: EvaluationReport) -> str:
    ordered = report.sorted()
    lines = ["# Segmentation agreement report", ""]

    lines += [
        "## Per-organ summary",
        "",
        "| Organ | Surface DSC (%) | Volumetric DSC (%) | Mean surface area (mm²) | Mean volume (mm³) | Rows |",
        "| --- | --- | --- | --- | --- | --- |",
    ]
    for s in summarize_by_organ(ordered):
        lines.append(
            f"| {s.organ} | {_pct_pair(s.surface_dsc)} | {_pct_pair(s.volumetric_dsc)} "
            f"| {_mm(s.mean_surface_area_mm2)} | {_mm(s.mean_volume_mm3)} | {s.n} |"
        )

    lines += [
        "",
        "## Results by case",
        "",
        "| Patient | Scan | Organ | Pair | Surface DSC (%) | Tolerance (mm) | Quantized (mm) | Volumetric DSC (%) | Flags |",
        "| --- | --- | --- | --- | --- | --- | --- | --- | --- |",
    ]
    for r in ordered.rows:
        lines.append(
            f"| {r.patient} | {r.scan} | {r.organ} | {r.pair} | {_pct(r.surface_dsc)} "
            f"| {_mm(r.tau_mm)} | {_mm(r.tau_quantized_mm)} | {_pct(r.volumetric_dsc)} "
            f"| {';'.join(r.flags)} |"
        )

    if ordered.aggregates:
        lines += [
            "",
            "## Per-patient aggregates",
            "",
            "| Patient | Scan | Pair | Aggregated surface DSC (%) | Flags |",
            "| --- | --- | --- | --- | --- |",
        ]
        for r in ordered.aggregates:
            lines.append(
                f"| {r.patient} | {r.scan} | {r.pair} | {_pct(r.surface_dsc)} "
                f"| {';'.join(r.flags)} |"
            )
    lines.append("")
    return "\n".join(lines)


PERTURB_HEADER = (
    "patient", "scan", "organ", "perturbation", "magnitude",
    "surface_dsc", "tau_mm", "tau_quantized_mm", "flags",
)


@dataclass(frozen=True)
class PerturbRow:
    """One sensitivity measurement: reference mask vs its perturbed copy.

    ``magnitude`` is the perturbation size in the perturbation's own unit
    (voxels for translations, mm for the elastic sigma, 0 for mirroring).
    """

    patient: str
    scan: str
    organ: str
    perturbation: str
    magnitude: float
    surface_dsc: float | None = None
    tau_mm: float | None = None
    tau_quantized_mm: float | None = None
    flags: tuple[str, ...] = ()

    def sort_key(self):
        return (self.patient, self.scan, self.organ, self.perturbation, self.magnitude)


def render_perturb_csv(rows: tuple[PerturbRow, ...]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(PERTURB_HEADER)
    for row in sorted(rows, key=PerturbRow.sort_key):
        writer.writerow([
            row.patient, row.scan, row.organ, row.perturbation,
            repr(float(row.magnitude)),
            _cell(row.surface_dsc), _cell(row.tau_mm), _cell(row.tau_quantized_mm),
            ";".join(row.flags),
        ])
    return out.getvalue()


def write_report(report: EvaluationReport, format: str, path) -> None:
    """Render to ``path``; format is "csv" or "markdown" ("md" works too)."""
    if format == "csv":
        text = render_csv(report)
    elif format in ("markdown", "md"):
        text = render_markdown(report)
    else:
        raise ValueError(f"unknown report format {format!r}")
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise ReportError(f"{path}: write failed: {exc}") from exc
