"""Command-line front end.

Verbs:
  analyze    evaluate one (workload, arch, mapping) triple, emit a JSON report
  check      legality check only
  bench      run a shipped benchmark suite, emit per-entry reports and CSVs
  dump-dpr   print placement relations in brace notation

Exit codes: 0 ok, 2 legality violation, 3 parse/config error, 4 oracle
mismatch, 5 enumeration budget exceeded.  Reports are byte-stable: same
inputs, same bytes.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import importlib.resources
import io
import os
import sys
import tempfile

from . import __version__
from .analysis import evaluate
from .arch import parse_arch
from .errors import BudgetError, ConfigError, LegalityError, MapcostError, ParseError
from .mapping import build_schedule_tree, check_legality, parse_mapping
from .oracle import DEFAULT_STEP_BUDGET, diff, simulate
from .placement import inter_level, theta
from .workload import BUILTIN_WORKLOADS, load_workload

EXIT_OK = 0
EXIT_LEGALITY = 2
EXIT_CONFIG = 3
EXIT_ORACLE = 4
EXIT_BUDGET = 5

# suite name -> list of (entry name, workload builtin, arch cfg, mapping cfg)
SUITES = {
    "gemm": [
        ("gemm_os_8x8", "gemm-256", "arch_gemm_os_8x8.yaml", "map_gemm_os_8x8.yaml"),
        ("gemm_ws_8x8", "gemm-256", "arch_gemm_ws_8x8.yaml", "map_gemm_ws_8x8.yaml"),
        ("gemm_vec_1x64", "gemm-256", "arch_gemm_vec_1x64.yaml", "map_gemm_vec_1x64.yaml"),
    ],
    "conv": [
        ("conv_rs_14x12", "alexnet-conv2", "arch_eyeriss_14x12.yaml", "map_conv_rs_14x12.yaml"),
        ("conv_ws_8x8", "mobilenetv2-2", "arch_conv_ws_8x8.yaml", "map_conv_ws_8x8.yaml"),
        ("conv_shid_8x8", "resnet50-1", "arch_conv_shid_8x8.yaml", "map_conv_shid_8x8.yaml"),
    ],
}


def builtin_config(name: str) -> str:
    return importlib.resources.files("mapcost").joinpath("configs", name).read_text()


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _load_triple(args):
    arch_text = _read(args.arch)
    mapping_text = _read(args.mapping)
    if args.workload in BUILTIN_WORKLOADS or os.path.exists(args.workload):
        workload_text = (args.workload if args.workload in BUILTIN_WORKLOADS
                         else _read(args.workload))
    else:
        raise ConfigError(f"workload '{args.workload}' is neither a builtin name "
                          f"({sorted(BUILTIN_WORKLOADS)}) nor a file")
    w = load_workload(workload_text)
    arch = parse_arch(arch_text)
    mapping = parse_mapping(mapping_text)
    prov = {
        "arch_sha256": _sha256(arch_text),
        "mapping_sha256": _sha256(mapping_text),
        "workload_sha256": _sha256(workload_text),
        "tool": f"mapcost {__version__}",
    }
    return w, arch, mapping, prov


def _atomic_write(path: str, data: str):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".mapcost-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def cmd_analyze(args) -> int:
    w, arch, mapping, prov = _load_triple(args)
    violations = check_legality(mapping, arch, w)
    if violations:
        for v in violations:
            print(f"ILLEGAL: {v}", file=sys.stderr)
        return EXIT_LEGALITY
    if args.check_only:
        print("legality: ok")
        return EXIT_OK

    report = evaluate(w, arch, mapping, method=args.method, provenance=prov)

    if args.with_oracle:
        tree = build_schedule_tree(mapping, w, arch)
        oracle_budget = int(os.environ.get("MAPCOST_ORACLE_BUDGET", DEFAULT_STEP_BUDGET))
        result = simulate(tree, w, arch, step_budget=oracle_budget)
        delta = diff(report.volumes, result.volumes)
        if delta:
            print("volumes: MISMATCH", file=sys.stderr)
            for array, level, fieldname, a, b in delta:
                print(f"  {array} @ {level}: {fieldname} analytical={a} oracle={b}",
                      file=sys.stderr)
            return EXIT_ORACLE
        print("volumes: MATCH")

    text = report.to_json()
    if args.report:
        _atomic_write(args.report, text)
        if args.verbose:
            print(f"wrote {args.report}")
    else:
        sys.stdout.write(text)
    if args.csv_breakdown:
        base = os.path.splitext(args.report or "report")[0]
        _atomic_write(base + ".volumes.csv", _csv_text(report.volume_csv_rows()))
        _atomic_write(base + ".energy.csv", _csv_text(report.energy_csv_rows()))
    return EXIT_OK


def cmd_check(args) -> int:
    w, arch, mapping, _ = _load_triple(args)
    violations = check_legality(mapping, arch, w)
    if violations:
        for v in violations:
            print(f"ILLEGAL: {v}", file=sys.stderr)
        return EXIT_LEGALITY
    print("legality: ok")
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.suite == "all":
        entries = [e for s in ("gemm", "conv") for e in SUITES[s]]
    elif args.suite in SUITES:
        entries = SUITES[args.suite]
    else:
        print(f"unknown suite '{args.suite}'; available: "
              f"{sorted(SUITES) + ['all']}", file=sys.stderr)
        return EXIT_CONFIG
    os.makedirs(args.out_dir, exist_ok=True)
    for name, workload, arch_cfg, map_cfg in entries:
        arch_text = builtin_config(arch_cfg)
        map_text = builtin_config(map_cfg)
        w = load_workload(workload)
        arch = parse_arch(arch_text)
        mapping = parse_mapping(map_text)
        prov = {
            "arch_sha256": _sha256(arch_text),
            "mapping_sha256": _sha256(map_text),
            "workload_sha256": _sha256(workload),
            "tool": f"mapcost {__version__}",
        }
        report = evaluate(w, arch, mapping, provenance=prov)
        base = os.path.join(args.out_dir, name)
        _atomic_write(base + ".json", report.to_json())
        _atomic_write(base + ".volumes.csv", _csv_text(report.volume_csv_rows()))
        _atomic_write(base + ".energy.csv", _csv_text(report.energy_csv_rows()))
        print(f"{name}: util={float(report.utilization):.4f} "
              f"cycles={report.cycles.total} energy_pJ={float(report.energy.total):.1f}")
    return EXIT_OK


def cmd_dump_dpr(args) -> int:
    w, arch, mapping, _ = _load_triple(args)
    tree = build_schedule_tree(mapping, w, arch)
    arrays = [args.array] if args.array else list(w.arrays)
    levels = [args.level] if args.level else [lv.name for lv in arch.levels]
    for level in levels:
        for array in arrays:
            if args.inter:
                parent = arch.parent_of(level)
                if parent is None:
                    continue
                rel = inter_level(tree, w, array, parent.name, level, arch=arch)
                print(f"Theta[{array}] {parent.name} -> {level}:")
            else:
                rel = theta(tree, w, array, level)
                print(f"theta[{array}] @ {level}:")
            print("  " + rel.render())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mapcost", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--version", action="version", version=f"mapcost {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_triple(p):
        p.add_argument("--arch", required=True, help="architecture config (YAML)")
        p.add_argument("--mapping", required=True, help="mapping config (YAML)")
        p.add_argument("--workload", required=True,
                       help=f"workload config file or builtin: {sorted(BUILTIN_WORKLOADS)}")

    pa = sub.add_parser("analyze", help="evaluate a mapping and emit a report")
    add_triple(pa)
    pa.add_argument("--report", "-o", help="output JSON path (default: stdout)")
    pa.add_argument("--check-only", action="store_true", help="stop after the legality gate")
    pa.add_argument("--with-oracle", action="store_true",
                    help="cross-check volumes against the trace oracle")
    pa.add_argument("--csv-breakdown", action="store_true",
                    help="also write volumes/energy CSVs next to the report")
    pa.add_argument("--method", choices=("fast", "relation"), default="fast",
                    help="volume evaluator (identical results; relation is desk-scale)")
    pa.add_argument("--verbose", "-v", action="store_true")
    pa.set_defaults(func=cmd_analyze)

    pc = sub.add_parser("check", help="legality check only")
    add_triple(pc)
    pc.set_defaults(func=cmd_check)

    pb = sub.add_parser("bench", help="run a shipped benchmark suite")
    pb.add_argument("suite", help="gemm | conv | all")
    pb.add_argument("--out-dir", default="bench-out")
    pb.set_defaults(func=cmd_bench)

    pd = sub.add_parser("dump-dpr", help="print placement relations in brace notation")
    add_triple(pd)
    pd.add_argument("--array", help="restrict to one array")
    pd.add_argument("--level", help="restrict to one level")
    pd.add_argument("--inter", action="store_true",
                    help="dump parent->child relations instead of per-level placements")
    pd.set_defaults(func=cmd_dump_dpr)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except LegalityError as exc:
        for v in exc.violations:
            print(f"ILLEGAL: {v}", file=sys.stderr)
        return EXIT_LEGALITY
    except BudgetError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, ParseError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MapcostError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
