"""Evaluate the six shipped full-size benchmarks (no oracle at this scale).

The carry-class evaluator collapses the billions of schedule steps into a
handful of lexicographic-decrement classes, so each run takes milliseconds.
"""

import time

from mapcost import evaluate, load_workload, parse_arch, parse_mapping
from mapcost.cli import SUITES, builtin_config

print(f"{'benchmark':16} {'util':>7} {'cycles':>12} {'energy (uJ)':>12} {'secs':>6}")
for suite in ("gemm", "conv"):
    for name, workload, arch_cfg, map_cfg in SUITES[suite]:
        t0 = time.monotonic()
        w = load_workload(workload)
        arch = parse_arch(builtin_config(arch_cfg))
        mapping = parse_mapping(builtin_config(map_cfg))
        report = evaluate(w, arch, mapping)
        dt = time.monotonic() - t0
        print(f"{name:16} {float(report.utilization):>7.4f} "
              f"{report.cycles.total:>12} "
              f"{float(report.energy.total) / 1e6:>12.2f} {dt:>6.2f}")

print("\nper-level access pattern of the row-stationary conv run:")
w = load_workload("alexnet-conv2")
arch = parse_arch(builtin_config("arch_eyeriss_14x12.yaml"))
mapping = parse_mapping(builtin_config("map_conv_rs_14x12.yaml"))
report = evaluate(w, arch, mapping)
for row in report.volume_csv_rows():
    print("  " + ",".join(str(v) for v in row))
