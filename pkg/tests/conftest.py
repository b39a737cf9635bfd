"""Shared builders for desk-scale test configurations."""

from __future__ import annotations

from mapcost import arch_from_dict, conv2d, gemm, mapping_from_dict

BASE_PARAMS = {
    "e_act": 1.0, "e_idle": 0.1, "e_multi": 0.3, "e_inter": 0.3,
    "lat_avg": 1, "bus_width_B": 16, "f_accel": 1.0e9, "f_dma": 1.0e9,
    "dma_init": 0,
}


def three_level_arch(grid=(4, 4), rf_connects=(), glb_cap=262144, rf_cap=256,
                     params=None, rf_per_operand=None, virtual_mid=False,
                     names=("dram", "glb", "rf")):
    """dram -> buffer -> PE-local chain, optionally with a virtual NoC level."""
    p = dict(BASE_PARAMS)
    p.update(params or {})
    levels = [
        {"name": names[0], "parent": None, "grid": [1, 1],
         "capacity_bytes": 1 << 33, "read_energy": 200.0, "write_energy": 200.0},
        {"name": names[1], "parent": names[0], "grid": [1, 1],
         "capacity_bytes": glb_cap, "read_energy": 6.0, "write_energy": 6.0},
    ]
    parent = names[1]
    if virtual_mid:
        levels.append({"name": "noc", "parent": parent, "grid": [1, 1], "virtual": True})
        parent = "noc"
    rf = {"name": names[2], "parent": parent, "grid": list(grid),
          "capacity_bytes": rf_cap, "read_energy": 1.0, "write_energy": 1.0}
    if rf_connects:
        rf["connect"] = [dict(c) for c in rf_connects]
    if rf_per_operand:
        rf["per_operand"] = dict(rf_per_operand)
    levels.append(rf)
    return arch_from_dict({"params": p, "levels": levels})


def lvl(level, order, T, S=None, sx=None, sy=None, simd=None):
    d = {"level": level, "temporal_order": list(order), "temporal_tile": dict(T)}
    if S is not None:
        d["spatial_tile"] = dict(S)
    if sx is not None:
        d["space_x"] = sx
    if sy is not None:
        d["space_y"] = sy
    if simd is not None:
        d["simd"] = simd
    return d


def mk_mapping(*levels):
    return mapping_from_dict({"levels": list(levels)})


def g(i, j, k):
    return {"i": i, "j": j, "k": k}


def c7(n, k, c, oy, ox, r, s):
    return {"n": n, "k": k, "c": c, "oy": oy, "ox": ox, "r": r, "s": s}


GEMM_ORDER = ("i", "j", "k")
CONV_ORDER = ("n", "k", "c", "oy", "ox", "r", "s")


def os_gemm_case(extent=8, grid=(4, 4)):
    """Output-stationary matmul scaled onto a small grid."""
    w = gemm(extent, extent, extent)
    px, py = grid
    arch = three_level_arch(grid=grid)
    m = mk_mapping(
        lvl("dram", GEMM_ORDER, g(extent, extent, extent)),
        lvl("glb", GEMM_ORDER, g(px, py, extent), S=g(1, 1, extent), sx="i", sy="j"),
        lvl("rf", GEMM_ORDER, g(1, 1, 1)),
    )
    return w, arch, m


def ws_gemm_case(extent=8, grid=(4, 4)):
    """Weight-stationary matmul: k and j spatial, psums hop leftward."""
    w = gemm(extent, extent, extent)
    px, py = grid
    arch = three_level_arch(
        grid=grid, rf_connects=[{"rel": "{[x, y] -> [x - 1, y]}", "array": "C"}])
    m = mk_mapping(
        lvl("dram", GEMM_ORDER, g(extent, extent, extent)),
        lvl("glb", ("j", "k", "i"), g(extent, py, px), S=g(extent, 1, 1),
            sx="k", sy="j"),
        lvl("rf", ("j", "k", "i"), g(1, 1, 1)),
    )
    return w, arch, m


def vector_gemm_case(extent=8, lanes=8):
    """All lanes along x, j unrolled."""
    w = gemm(extent, extent, extent)
    arch = three_level_arch(grid=(lanes, 1))
    m = mk_mapping(
        lvl("dram", GEMM_ORDER, g(extent, extent, extent)),
        lvl("glb", GEMM_ORDER, g(2, extent, extent), S=g(2, extent // lanes, extent),
            sx="j"),
        lvl("rf", GEMM_ORDER, g(1, 1, 1)),
    )
    return w, arch, m


def rs_conv_case():
    """Tiny row-stationary conv: oy along x, filter rows along y."""
    w = conv2d(1, 1, 1, 4, 4, 3, 3, 1)
    arch = three_level_arch(
        grid=(4, 3),
        rf_connects=[{"rel": "{[x, y] -> [x, y - 1]}", "array": "O"},
                     {"rel": "{[x, y] -> [x + 1, y - 1]}", "array": "I"}])
    m = mk_mapping(
        lvl("dram", CONV_ORDER, c7(1, 1, 1, 4, 4, 3, 3)),
        lvl("glb", CONV_ORDER, c7(1, 1, 1, 4, 4, 3, 3),
            S=c7(1, 1, 1, 1, 4, 1, 3), sx="oy", sy="r"),
        lvl("rf", CONV_ORDER, c7(1, 1, 1, 1, 1, 1, 1)),
    )
    return w, arch, m


def shid_conv_case():
    """Tiny output-pixel-parallel conv with input forwarding.

    r runs innermost so that when a PE moves to filter row r+1, the PE below
    held exactly that input row on the previous step: temporal-spatial reuse
    through the downward connect.
    """
    w = conv2d(1, 1, 1, 4, 4, 3, 3, 1)
    order = ("n", "k", "c", "oy", "ox", "s", "r")
    arch = three_level_arch(
        grid=(4, 4),
        rf_connects=[{"rel": "{[x, y] -> [x, y - 1]}", "array": "I"}])
    m = mk_mapping(
        lvl("dram", order, c7(1, 1, 1, 4, 4, 3, 3)),
        lvl("glb", order, c7(1, 1, 1, 4, 4, 3, 3),
            S=c7(1, 1, 1, 1, 1, 3, 3), sx="ox", sy="oy"),
        lvl("rf", order, c7(1, 1, 1, 1, 1, 1, 1)),
    )
    return w, arch, m


def desk_scale_cases():
    """The oracle-equivalence fleet: every case runs in well under a second."""
    return [
        ("os_4x4", *os_gemm_case(8, (4, 4))),
        ("os_2x2", *os_gemm_case(8, (2, 2))),
        ("ws_4x4", *ws_gemm_case(8, (4, 4))),
        ("ws_2x2", *ws_gemm_case(8, (2, 2))),
        ("vec_8", *vector_gemm_case(8, 8)),
        ("vec_4", *vector_gemm_case(8, 4)),
        ("conv_rs", *rs_conv_case()),
        ("conv_shid", *shid_conv_case()),
    ]
