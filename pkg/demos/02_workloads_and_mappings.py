"""Workloads, mappings, the legality gate and the compiled schedule tree."""

from mapcost import build_schedule_tree, check_legality, gemm, mapping_from_dict, \
    arch_from_dict

w = gemm(8, 8, 8)
print(w, "->", w.domain_size, "MACs; reduction dims:", w.reduction_dims)
for a in w.arrays:
    print(f"  array {a}: extents {w.array_extents(a)}")

arch = arch_from_dict({
    "params": {"e_act": 1.0, "e_idle": 0.1, "e_multi": 0.3, "e_inter": 0.3,
               "lat_avg": 1, "bus_width_B": 16, "f_accel": 1.0e9, "f_dma": 1.0e9,
               "dma_init": 0},
    "levels": [
        {"name": "dram", "parent": None, "grid": [1, 1], "capacity_bytes": 1 << 30,
         "read_energy": 200.0, "write_energy": 200.0},
        {"name": "glb", "parent": "dram", "grid": [1, 1], "capacity_bytes": 65536,
         "read_energy": 6.0, "write_energy": 6.0},
        {"name": "rf", "parent": "glb", "grid": [4, 4], "capacity_bytes": 64,
         "read_energy": 1.0, "write_energy": 1.0},
    ]})

# output-stationary: i and j unrolled 4x4 across the PE grid
mapping = mapping_from_dict({"levels": [
    {"level": "dram", "temporal_order": ["i", "j", "k"],
     "temporal_tile": {"i": 8, "j": 8, "k": 8}},
    {"level": "glb", "temporal_order": ["i", "j", "k"],
     "temporal_tile": {"i": 4, "j": 4, "k": 8},
     "spatial_tile": {"i": 1, "j": 1, "k": 8},
     "space_x": "i", "space_y": "j"},
    {"level": "rf", "temporal_order": ["i", "j", "k"],
     "temporal_tile": {"i": 1, "j": 1, "k": 1}},
]})

violations = check_legality(mapping, arch, w)
print("\nlegality:", "ok" if not violations else violations)

tree = build_schedule_tree(mapping, w, arch)
print("\nschedule tree:")
print(tree.pretty())
print("\nactive PEs per step:", tree.active_units(),
      "| leaf time steps:", tree.leaf_step_count())

# an illegal variant: 8-way parallelism onto a 4-wide axis
bad = mapping_from_dict({"levels": [
    {"level": "dram", "temporal_order": ["i", "j", "k"],
     "temporal_tile": {"i": 8, "j": 8, "k": 8}},
    {"level": "glb", "temporal_order": ["i", "j", "k"],
     "temporal_tile": {"i": 8, "j": 8, "k": 8},
     "spatial_tile": {"i": 1, "j": 8, "k": 8}, "space_x": "i"},
    {"level": "rf", "temporal_order": ["i", "j", "k"],
     "temporal_tile": {"i": 1, "j": 1, "k": 1}},
]})
for v in check_legality(bad, arch, w):
    print("\nrejected:", v)
