"""Small shared builders for the demo scripts."""

from mapcost import arch_from_dict, gemm, mapping_from_dict


def tiny_os_case():
    """gemm(2,2,2), output-stationary on a 2x2 PE grid."""
    w = gemm(2, 2, 2)
    arch = arch_from_dict({
        "params": {"e_act": 1.0, "e_idle": 0.1, "e_multi": 0.3, "e_inter": 0.3,
                   "lat_avg": 1, "bus_width_B": 16, "f_accel": 1.0e9,
                   "f_dma": 1.0e9, "dma_init": 0},
        "levels": [
            {"name": "dram", "parent": None, "grid": [1, 1],
             "capacity_bytes": 1 << 30, "read_energy": 200.0, "write_energy": 200.0},
            {"name": "glb", "parent": "dram", "grid": [1, 1],
             "capacity_bytes": 65536, "read_energy": 6.0, "write_energy": 6.0},
            {"name": "rf", "parent": "glb", "grid": [2, 2],
             "capacity_bytes": 64, "read_energy": 1.0, "write_energy": 1.0},
        ]})
    mapping = mapping_from_dict({"levels": [
        {"level": "dram", "temporal_order": ["i", "j", "k"],
         "temporal_tile": {"i": 2, "j": 2, "k": 2}},
        {"level": "glb", "temporal_order": ["i", "j", "k"],
         "temporal_tile": {"i": 2, "j": 2, "k": 2},
         "spatial_tile": {"i": 1, "j": 1, "k": 2},
         "space_x": "i", "space_y": "j"},
        {"level": "rf", "temporal_order": ["i", "j", "k"],
         "temporal_tile": {"i": 1, "j": 1, "k": 1}},
    ]})
    return w, arch, mapping
