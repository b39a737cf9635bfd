"""The trace oracle replays the schedule step by step and must agree exactly.

The oracle shares no classification code with the analytical path; an empty
diff is the ground-truth check behind every analytical number.
"""

import io

from mapcost import build_schedule_tree, evaluate
from mapcost.oracle import diff, dump_events, simulate
from demo_common import tiny_os_case

w, arch, mapping = tiny_os_case()
tree = build_schedule_tree(mapping, w, arch)

events = []
oracle = simulate(tree, w, arch, event_log=events)
analytical = evaluate(w, arch, mapping)

delta = diff(analytical.volumes, oracle.volumes)
print("analytical vs oracle:", "MATCH" if not delta else delta)
print("oracle active-PE series:", oracle.active_pe)

print("\nfirst classified accesses of the trace:")
buf = io.StringIO()
dump_events(events[:8], buf)
print(buf.getvalue())
