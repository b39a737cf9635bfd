"""From placements to costs: reuse classes, utilization, energy, cycles.

Each placement entering a level is classified once, cheapest reuse first:
TV (same unit held it last step), TSV (a connected neighbor held it), SV
(arrives in a multicast group, g-1 per group), UV (fresh fetch).
"""

from mapcost import evaluate
from demo_common import tiny_os_case

w, arch, mapping = tiny_os_case()
report = evaluate(w, arch, mapping)

print("volumes per (level, array):")
print(f"  {'level':6} {'array':5} {'TV':>4} {'SV':>4} {'TSV':>4} {'UV':>4} {'Total':>6}")
for (level, array), c in report.volumes.items():
    print(f"  {level:6} {array:5} {c.tv:>4} {c.sv:>4} {c.tsv:>4} {c.uv:>4} {c.total:>6}")

print("\nThe output array C is held in place while k runs: pure temporal reuse.")
print("A and B are each broadcast to a row/column of PEs: spatial reuse.")

print("\nutilization:", float(report.utilization),
      "| mean active PEs:", report.act_pe, "of", arch.params.pe_size)
print("cycles:", f"comp={report.cycles.comp}", f"dram={report.cycles.dram}",
      f"on_chip={report.cycles.on_chip}", f"total={report.cycles.total}")
print("energy (pJ):", f"mac={float(report.energy.mac):.1f}",
      f"dram={float(report.energy.dram):.1f}",
      f"on_chip={ {k: float(v) for k, v in report.energy.on_chip.items()} }",
      f"connect={float(report.energy.connect):.1f}")
