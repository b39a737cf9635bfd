"""Where does each array element live, at which unit, at which time?

Space-time maps send loop instances to [[space] -> [time]] stamps; composing
with the inverted access function gives the placement of each array element;
the inter-level relation adds the feeding parent placement in front.
"""

from mapcost import build_schedule_tree, inter_level, space_time_map, theta
from demo_common import tiny_os_case

w, arch, mapping = tiny_os_case()
tree = build_schedule_tree(mapping, w, arch)

st = space_time_map(tree, "rf")
print("space-time map at rf (instance -> [[s] -> [t]]):")
print(" ", st.rel.render()[:120], "...")
print("  space arity", st.s_arity, "| time arity", st.t_arity)

print("\nDRAM space-stamp is the constant (1,):")
st_dram = space_time_map(tree, "dram")
print(" ", sorted({stamp[:1] for _, stamp in st_dram.rel.pairs}))

ps = theta(tree, w, "C", "rf")
print("\ntheta[C] at rf: every output element sits in one PE for both k steps")
print(" ", ps.render())

ti = inter_level(tree, w, "A", "glb", "rf")
print("\nTheta[A] glb -> rf (parent placement prepended):")
print(" ", ti.render()[:160], "...")
print("  pairs:", ti.rel.cardinality)
