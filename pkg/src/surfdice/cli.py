"""Command line front door.

Subcommands:
  evaluate    score candidate observers against a reference across a dataset
  calibrate   pick per-organ tolerances from inter-observer distances
  perturb     sensitivity table for perturbed copies of the reference masks
  table       re-render a saved report as CSV or markdown
  sparse-dsc  volumetric DSC against slice-sampled ground truth

Exit codes: 0 success, 1 input load failure, 2 per-case errors (the run
still completes and writes its report). Diagnostics go to stderr, one line
per error.
"""

from __future__ import annotations

import argparse
import datetime
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .calibrate import (
    DEFAULT_PERCENTILE,
    load_tolerance_spec,
    save_tolerance_spec,
)
from .errors import (
    CalibrationError,
    GridMismatchError,
    ManifestError,
    NiftiError,
    ReportError,
    SparseLabelError,
)
from .evaluate import calibrate_from_manifest, evaluate_dataset, perturb_sensitivity
from .grid import SparseLabels
from .manifest import load_manifest
from .metrics import ToleranceSpec, sparse_volumetric_dsc
from .nifti import read_nifti
from .report import read_report_csv, render_csv, render_markdown, render_perturb_csv

log = logging.getLogger("surfdice")


@dataclass(frozen=True)
class RunConfig:
    """Validated options shared by the batch subcommands."""

    manifest_path: Path
    reference: str
    candidates: tuple[str, ...] | None = None
    tolerances_path: Path | None = None
    default_tau_mm: float | None = None
    out_dir: Path | None = None
    format: str = "csv"
    jobs: int = 1
    seed: int | None = None
    mask_warp: str = "linear"
    unweighted: bool = False

    def __post_init__(self):
        if self.jobs < 1:
            raise ValueError("--jobs must be at least 1")
        if self.candidates and self.reference in self.candidates:
            raise ValueError("--reference must differ from every --candidate")


def _default_jobs() -> int:
    raw = os.environ.get("SURFDICE_JOBS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _add_tolerance_flags(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--tolerances", type=Path, metavar="JSON",
                       help="tolerance spec written by the calibrate subcommand")
    group.add_argument("--default-tau-mm", type=float, metavar="MM",
                       help="one tolerance for every organ, in mm")


def get_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="surfdice",
        description="Surface and volumetric agreement metrics for 3D segmentations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evaluate", help="score candidates against a reference")
    ev.add_argument("--manifest", type=Path, required=True)
    _add_tolerance_flags(ev)
    ev.add_argument("--reference", required=True, help="reference observer id")
    ev.add_argument("--candidate", action="append", default=None, metavar="OBSERVER",
                    help="candidate observer id; repeatable; default: all others")
    ev.add_argument("--out", type=Path, required=True, help="output directory")
    ev.add_argument("--format", choices=("csv", "md"), default="csv")
    ev.add_argument("--jobs", type=int, default=_default_jobs(),
                    help="parallel worker count (env SURFDICE_JOBS)")

    ca = sub.add_parser("calibrate", help="pick per-organ tolerances")
    ca.add_argument("--manifest", type=Path, required=True)
    ca.add_argument("--out", type=Path, required=True, help="tolerance JSON path")
    ca.add_argument("--unweighted-percentile", action="store_true",
                    help="rank distances without area weights")

    pe = sub.add_parser("perturb", help="perturbation sensitivity table")
    pe.add_argument("--manifest", type=Path, required=True)
    _add_tolerance_flags(pe)
    pe.add_argument("--reference", required=True)
    pe.add_argument("--seed", type=int, required=True)
    pe.add_argument("--mask-warp", choices=("linear", "nearest"), default="linear")
    pe.add_argument("--out", type=Path, required=True, help="output directory")

    ta = sub.add_parser("table", help="re-render a saved report")
    ta.add_argument("report", type=Path, help="report CSV written by evaluate")
    ta.add_argument("--format", choices=("csv", "md"), default="md")
    ta.add_argument("--out", type=Path, default=None,
                    help="output file; default: stdout")

    sp = sub.add_parser("sparse-dsc",
                        help="volumetric DSC against slice-sampled ground truth")
    sp.add_argument("--cases", type=Path, required=True,
                    help="JSON list of {labelled, values, prediction} NIfTI paths")
    sp.add_argument("--out", type=Path, default=None,
                    help="output JSON; default: stdout")

    return parser


def _write_meta(out_dir: Path, name: str, args: argparse.Namespace) -> None:
    """Run provenance sidecar. Not part of the deterministic payload."""
    meta = {
        "command": args.command,
        "arguments": {k: str(v) for k, v in sorted(vars(args).items())
                      if k != "command" and v is not None},
        "written_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    with open(out_dir / f"{name}.meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_tolerances(args: argparse.Namespace) -> ToleranceSpec:
    if args.tolerances is not None:
        return load_tolerance_spec(args.tolerances)
    return ToleranceSpec(default_mm=args.default_tau_mm)


def _cmd_evaluate(args: argparse.Namespace) -> int:
    config = RunConfig(
        manifest_path=args.manifest,
        reference=args.reference,
        candidates=None if args.candidate is None else tuple(args.candidate),
        tolerances_path=args.tolerances,
        default_tau_mm=args.default_tau_mm,
        out_dir=args.out,
        format=args.format,
        jobs=args.jobs,
    )
    try:
        manifest = load_manifest(config.manifest_path)
        tolerances = _load_tolerances(args)
    except (ManifestError, OSError, ValueError) as exc:
        log.error("%s", exc)
        return 1

    report, errors = evaluate_dataset(
        manifest, tolerances, config.reference,
        candidates=config.candidates, jobs=config.jobs,
    )

    config.out_dir.mkdir(parents=True, exist_ok=True)
    suffix = "csv" if config.format == "csv" else "md"
    out_path = config.out_dir / f"report.{suffix}"
    text = render_csv(report) if config.format == "csv" else render_markdown(report)
    out_path.write_text(text)
    _write_meta(config.out_dir, "report", args)

    for err in errors:
        log.error("%s", err)
    print(f"wrote {out_path} ({len(report.rows)} rows, "
          f"{len(report.aggregates)} aggregates)")
    return 2 if errors else 0


def _cmd_calibrate(args: argparse.Namespace) -> int:
    try:
        manifest = load_manifest(args.manifest)
    except (ManifestError, OSError, ValueError) as exc:
        log.error("%s", exc)
        return 1
    try:
        spec, counts = calibrate_from_manifest(
            manifest, percentile=DEFAULT_PERCENTILE,
            weighted=not args.unweighted_percentile,
        )
    except (CalibrationError, NiftiError, GridMismatchError) as exc:
        log.error("%s", exc)
        return 1

    observers = ", ".join(manifest.all_observers())
    save_tolerance_spec(spec, args.out, percentile=DEFAULT_PERCENTILE,
                        provenance=[f"observers: {observers}"])
    for organ in sorted(spec.per_organ):
        print(f"{organ}: tau = {spec.per_organ[organ]:.3f} mm "
              f"({counts[organ]} samples)")
    print(f"wrote {args.out}")
    return 0


def _cmd_perturb(args: argparse.Namespace) -> int:
    config = RunConfig(
        manifest_path=args.manifest,
        reference=args.reference,
        tolerances_path=args.tolerances,
        default_tau_mm=args.default_tau_mm,
        out_dir=args.out,
        seed=args.seed,
        mask_warp=args.mask_warp,
    )
    try:
        manifest = load_manifest(config.manifest_path)
        tolerances = _load_tolerances(args)
    except (ManifestError, OSError, ValueError) as exc:
        log.error("%s", exc)
        return 1

    rows, errors = perturb_sensitivity(
        manifest, tolerances, config.reference,
        seed=config.seed, mask_warp=config.mask_warp,
    )
    config.out_dir.mkdir(parents=True, exist_ok=True)
    out_path = config.out_dir / "perturbations.csv"
    out_path.write_text(render_perturb_csv(rows))
    _write_meta(config.out_dir, "perturbations", args)

    for err in errors:
        log.error("%s", err)
    print(f"wrote {out_path} ({len(rows)} rows)")
    return 2 if errors else 0


def _cmd_table(args: argparse.Namespace) -> int:
    try:
        report = read_report_csv(args.report)
    except (ReportError, OSError) as exc:
        log.error("%s", exc)
        return 1
    text = render_csv(report) if args.format == "csv" else render_markdown(report)
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text)
        print(f"wrote {args.out}")
    return 0


def _cmd_sparse_dsc(args: argparse.Namespace) -> int:
    try:
        with open(args.cases) as fh:
            doc = json.load(fh)
        if not isinstance(doc, list):
            raise ValueError(f"{args.cases}: expected a JSON list of cases")
        base = args.cases.parent
        cases = []
        for i, entry in enumerate(doc):
            for key in ("labelled", "values", "prediction"):
                if key not in entry:
                    raise ValueError(f"{args.cases}: case {i} is missing {key!r}")
            labelled = read_nifti(base / entry["labelled"], kind="mask")
            values = read_nifti(base / entry["values"], kind="mask")
            prediction = read_nifti(base / entry["prediction"], kind="mask")
            cases.append((SparseLabels(labelled=labelled, values=values), prediction))
        value = sparse_volumetric_dsc(cases)
    except (NiftiError, SparseLabelError, GridMismatchError, OSError, ValueError) as exc:
        log.error("%s", exc)
        return 1

    payload = json.dumps(
        {"cases": len(cases), "sparse_volumetric_dsc": value},
        indent=2, sort_keys=True,
    ) + "\n"
    if args.out is None:
        sys.stdout.write(payload)
    else:
        args.out.write_text(payload)
    return 0


_COMMANDS = {
    "evaluate": _cmd_evaluate,
    "calibrate": _cmd_calibrate,
    "perturb": _cmd_perturb,
    "table": _cmd_table,
    "sparse-dsc": _cmd_sparse_dsc,
}


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(message)s",
                        force=True)
    args = get_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ValueError as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
