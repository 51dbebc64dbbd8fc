"""Command-line interface: run scenarios, sweep parameters, list presets,
benchmark the location index, validate scenario files.

Exit codes: 0 success, 1 scenario parse/validation error, 2 runtime error.
Reports are written atomically (temp file + rename) so a failed run never
leaves a partial report behind. The default output directory comes from
CACHESCHED_OUT (falling back to the working directory).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import yaml

from . import engine, metrics
from .errors import CacheschedError, ConfigurationError
from .index import RemoteLookupModel, index_microbench
from .scenario import list_presets, preset_text, scenario_from_dict

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2

DEFAULT_CROSSOVER_TARGET = 4.18e6


def _out_dir(args) -> Path:
    if getattr(args, "out_dir", None):
        return Path(args.out_dir)
    return Path(os.environ.get("CACHESCHED_OUT", "."))


def _load_doc(source: str) -> tuple[dict, Path | None, str]:
    """Resolve a scenario source: an existing file path, else a preset name.

    Returns (document, base directory for relative trace paths, stem used
    to name output files).
    """
    path = Path(source)
    if path.exists():
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigurationError(f"{source}: {exc.strerror or exc}") from exc
        base, stem = path.parent, path.stem
    else:
        text = preset_text(source)  # raises with the known-preset list
        base, stem = None, source
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        at = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigurationError(f"{source}: invalid YAML{at}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{source}: scenario document must be a mapping")
    return doc, base, stem


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_text(text)
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


def _summary_line(report) -> str:
    ratio = metrics.hit_ratio(report)
    ratio_s = f"{ratio:.4f}" if ratio is not None else "n/a"
    if report.tasks_completed:
        persistent, peer, local = metrics.per_task_data_movement(report)
        movement = (f"mb_per_task persistent={persistent:.4f} "
                    f"peer={peer:.4f} local={local:.4f}")
    else:
        movement = "mb_per_task n/a"
    return (f"tasks={report.tasks_completed} makespan={report.makespan:.3f}s "
            f"hit_ratio={ratio_s} {movement}")


def _run_scenario(doc: dict, base, seed):
    if seed is not None:
        doc = dict(doc)
        doc["seed"] = seed
    scenario = scenario_from_dict(doc, base_dir=base)
    return engine.run(scenario)


def cmd_run(args) -> int:
    doc, base, stem = _load_doc(args.scenario)
    if args.seed is not None:
        doc = {**doc, "seed": args.seed}
    scenario = scenario_from_dict(doc, base_dir=base)
    if args.decision_log:
        scenario.collect_decision_log = True
    report = engine.run(scenario)

    out = Path(args.out) if args.out else _out_dir(args) / f"{stem}_report.{args.format}"
    _write_atomic(out, metrics.export(report, args.format,
                                      include_timing=args.include_timing))
    if args.decision_log:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["time_s", "task", "executor", "policy", "overlap", "hint_count"])
        writer.writerows(report.decision_log)
        _write_atomic(Path(args.decision_log), buf.getvalue())
    stats = report.dispatch_decision_stats or {}
    print(_summary_line(report), f"report={out}")
    print(f"dispatch rounds={stats.get('rounds', 0)} "
          f"wall_total={stats.get('total_s', 0.0):.6f}s "
          f"wall_mean={stats.get('mean_s', 0.0):.9f}s", file=sys.stderr)
    return EXIT_OK


def _set_path(doc: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    here = doc
    for key in keys[:-1]:
        nxt = here.get(key)
        if nxt is None:
            nxt = here[key] = {}
        elif not isinstance(nxt, dict):
            raise ConfigurationError(f"axis {dotted!r}: {key!r} is not a mapping")
        here = nxt
    here[keys[-1]] = value


def _parse_values(raw: str) -> list:
    values = [yaml.safe_load(tok.strip()) for tok in raw.split(",") if tok.strip()]
    if not values:
        raise ConfigurationError("sweep needs at least one value")
    try:
        return sorted(values)
    except TypeError:
        return values  # mixed types: keep the given order


def cmd_sweep(args) -> int:
    doc, base, stem = _load_doc(args.scenario)
    values = _parse_values(args.values)
    out_dir = _out_dir(args)
    combined = Path(args.combined) if args.combined else out_dir / f"{stem}_sweep.csv"

    finished: list[tuple[object, object]] = []  # (value, report)

    def combined_text(rows) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow((args.axis,) + metrics.CSV_COLUMNS)
        for value, report in rows:
            row = metrics.scalar_row(report)
            writer.writerow(
                [value] + [metrics.csv_cell(row[k]) for k in metrics.CSV_COLUMNS]
            )
        return buf.getvalue()

    for value in values:
        instance = json.loads(json.dumps(doc))  # deep copy, YAML-safe types
        _set_path(instance, args.axis, value)
        try:
            report = _run_scenario(instance, base, args.seed)
        except CacheschedError as exc:
            partial = combined.with_name(combined.stem + ".partial.csv")
            _write_atomic(partial, combined_text(finished))
            print(f"sweep aborted at {args.axis}={value}: {exc}", file=sys.stderr)
            print(f"partial results ({len(finished)} of {len(values)} rows): {partial}",
                  file=sys.stderr)
            return EXIT_INVALID if isinstance(exc, ConfigurationError) else EXIT_RUNTIME
        tag = str(value).replace("/", "_")
        out = out_dir / f"{stem}_{args.axis.replace('.', '-')}_{tag}.{args.format}"
        _write_atomic(out, metrics.export(report, args.format))
        print(f"{args.axis}={value}: {_summary_line(report)} report={out}")
        finished.append((value, report))

    _write_atomic(combined, combined_text(finished))
    print(f"combined: {combined}")
    return EXIT_OK


def cmd_presets(args) -> int:
    for name, description in list_presets():
        print(f"{name:36s} {description}")
    return EXIT_OK


def cmd_microbench(args) -> int:
    result = index_microbench(
        num_entries=args.entries,
        num_lookups=args.lookups,
        num_inserts=args.inserts,
        reader_threads=args.readers,
    )
    model = RemoteLookupModel()
    doc = result.as_dict()
    doc["remote_model"] = {
        "base_latency_ms": model.base_latency_ms,
        "anchor_nodes": model.anchor_nodes,
        "anchor_latency_ms": model.anchor_latency_ms,
        "latency_ms_1e6_nodes": model.latency_ms(1_000_000),
        "crossover_target_lookups_per_sec": args.target,
        "crossover_nodes": model.crossover_nodes(args.target),
    }
    if args.format == "json":
        text = json.dumps(doc, indent=2) + "\n"
    else:
        flat = dict(doc)
        remote = flat.pop("remote_model")
        flat.update({f"remote_{k}": v for k, v in remote.items()})
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(flat.keys())
        writer.writerow("" if v is None else v for v in flat.values())
        text = buf.getvalue()
    if args.out:
        _write_atomic(Path(args.out), text)
    print(text, end="")
    return EXIT_OK


def cmd_validate(args) -> int:
    status = EXIT_OK
    for source in args.scenarios:
        try:
            doc, base, _ = _load_doc(source)
            scenario_from_dict(doc, base_dir=base)
        except ConfigurationError as exc:
            print(f"{source}: {exc}", file=sys.stderr)
            status = EXIT_INVALID
        else:
            print(f"{source}: ok")
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cachesched",
        description="Data-diffusion scheduling simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scenario and write its report")
    run_p.add_argument("scenario", help="scenario file path or preset name")
    run_p.add_argument("--out", help="report file path (default: <out dir>/<name>_report.<fmt>)")
    run_p.add_argument("--out-dir", help="output directory (default: $CACHESCHED_OUT or .)")
    run_p.add_argument("--format", choices=("csv", "json"), default="csv")
    run_p.add_argument("--seed", type=int, help="override the scenario seed")
    run_p.add_argument("--include-timing", action="store_true",
                       help="include wall-clock dispatch stats in the report "
                            "(makes reports non-reproducible)")
    run_p.add_argument("--decision-log", metavar="PATH",
                       help="also write the per-dispatch decision log as CSV")
    run_p.set_defaults(func=cmd_run)

    sweep_p = sub.add_parser("sweep", help="run a scenario once per axis value")
    sweep_p.add_argument("scenario", help="template scenario file path or preset name")
    sweep_p.add_argument("--axis", required=True,
                         help="dotted scenario key to vary, e.g. workload.table2_locality")
    sweep_p.add_argument("--values", required=True,
                         help="comma-separated axis values, e.g. 1,1.38,2,3,4,5,10,20,30")
    sweep_p.add_argument("--out-dir", help="output directory (default: $CACHESCHED_OUT or .)")
    sweep_p.add_argument("--combined", help="combined CSV path (default: <name>_sweep.csv)")
    sweep_p.add_argument("--format", choices=("csv", "json"), default="csv")
    sweep_p.add_argument("--seed", type=int, help="override the scenario seed")
    sweep_p.set_defaults(func=cmd_sweep)

    presets_p = sub.add_parser("presets", help="list shipped scenario presets")
    presets_p.set_defaults(func=cmd_presets)

    micro_p = sub.add_parser("microbench", help="benchmark the location index")
    micro_p.add_argument("--entries", type=int, default=1_000_000)
    micro_p.add_argument("--lookups", type=int, default=1_000_000)
    micro_p.add_argument("--inserts", type=int, default=100_000)
    micro_p.add_argument("--readers", type=int, default=0,
                         help="additional concurrent reader threads")
    micro_p.add_argument("--target", type=float, default=DEFAULT_CROSSOVER_TARGET,
                         help="lookups/sec target for the distributed crossover")
    micro_p.add_argument("--format", choices=("json", "csv"), default="json")
    micro_p.add_argument("--out", help="also write the stats to this file")
    micro_p.set_defaults(func=cmd_microbench)

    val_p = sub.add_parser("validate", help="validate scenario files without running")
    val_p.add_argument("scenarios", nargs="+", help="scenario file paths or preset names")
    val_p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CacheschedError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
