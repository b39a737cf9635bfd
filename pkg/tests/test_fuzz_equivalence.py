"""Randomized differential testing: oracle vs both analytical evaluators.

Configurations are generated legal by construction where possible; anything
the legality gate still rejects is skipped.  Every surviving case must agree
exactly across all three paths, over random loop orders, tile chains,
spatial axes, grids and connect topologies.
"""

import random

import pytest

from mapcost import arch_from_dict, build_schedule_tree, check_legality, conv2d, \
    evaluate, gemm, mapping_from_dict
from mapcost.oracle import diff, simulate

CONNECT_POOL = [
    "{[x, y] -> [x, y - 1]}",
    "{[x, y] -> [x - 1, y]}",
    "{[x, y] -> [x + 1, y - 1]}",
    "{[x, y] -> [x + 1, y]}",
]


def _divisor(rng, n):
    return rng.choice([d for d in (1, 2, 3, 4, 6, 8) if d <= n and n % d == 0])


def _arch(rng, grid, connects):
    return arch_from_dict({
        "params": {"e_act": 1.0, "e_idle": 0.2, "e_multi": 0.1, "e_inter": 0.1,
                   "lat_avg": 1, "bus_width_B": rng.choice((1, 8)),
                   "f_accel": 1.0e9, "f_dma": 1.0e9, "dma_init": 0},
        "levels": [
            {"name": "dram", "parent": None, "grid": [1, 1],
             "capacity_bytes": 1 << 30, "read_energy": 100.0, "write_energy": 100.0},
            {"name": "glb", "parent": "dram", "grid": [1, 1],
             "capacity_bytes": 1 << 20, "read_energy": 4.0, "write_energy": 4.0},
            {"name": "rf", "parent": "glb", "grid": list(grid),
             "capacity_bytes": 1 << 16, "read_energy": 1.0, "write_energy": 1.0,
             "connect": connects},
        ]})


def _spatial_pick(rng, dims, tiles, grid):
    """Choose up to one x dim and one y dim with legal parallelism."""
    s = dict(tiles)
    sx = sy = None
    candidates = [d for d in dims if tiles[d] > 1]
    rng.shuffle(candidates)
    for d in candidates:
        par_opts = [p for p in (2, 3, 4) if tiles[d] % p == 0]
        if not par_opts:
            continue
        p = rng.choice(par_opts)
        if sx is None and p <= grid[0]:
            sx = d
            s[d] = tiles[d] // p
        elif sy is None and p <= grid[1]:
            sy = d
            s[d] = tiles[d] // p
        if sx and sy:
            break
    return s, sx, sy


def _gemm_case(rng):
    ext = {d: rng.choice((2, 4, 6, 8)) for d in "ijk"}
    w = gemm(ext["i"], ext["j"], ext["k"])
    grid = rng.choice(((2, 2), (4, 2), (4, 4), (3, 3)))
    glb_t = {d: _divisor(rng, ext[d]) * 1 for d in "ijk"}
    glb_t = {d: max(glb_t[d], 1) for d in glb_t}
    # rf tile: 1 or a divisor of the per-unit allotment (set after split)
    s, sx, sy = _spatial_pick(rng, "ijk", glb_t, grid)
    rf_t = {d: _divisor(rng, s[d]) if rng.random() < 0.3 else 1 for d in "ijk"}
    order = list("ijk")
    orders = [rng.sample(order, 3) for _ in range(3)]
    connects = [{"rel": rng.choice(CONNECT_POOL),
                 **({"array": rng.choice("CAB")} if rng.random() < 0.5 else {})}
                for _ in range(rng.randrange(3))]
    # a split reduction dim needs an accumulation path for the written array
    if sx == "k" or sy == "k":
        connects.append({"rel": "{[x, y] -> [x - 1, y]}", "array": "C"})
    arch = _arch(rng, grid, connects)
    m = mapping_from_dict({"levels": [
        {"level": "dram", "temporal_order": orders[0], "temporal_tile": dict(ext)},
        {"level": "glb", "temporal_order": orders[1], "temporal_tile": glb_t,
         "spatial_tile": s,
         **({"space_x": sx} if sx else {}), **({"space_y": sy} if sy else {})},
        {"level": "rf", "temporal_order": orders[2], "temporal_tile": rf_t},
    ]})
    return w, arch, m


def _conv_case(rng):
    dims = ("n", "k", "c", "oy", "ox", "r", "s")
    ext = {"n": 1, "k": rng.choice((1, 2, 4)), "c": rng.choice((1, 2)),
           "oy": rng.choice((2, 4)), "ox": rng.choice((2, 4)),
           "r": rng.choice((1, 2, 3)), "s": rng.choice((1, 2, 3))}
    stride = rng.choice((1, 1, 2))
    w = conv2d(ext["n"], ext["k"], ext["c"], ext["oy"], ext["ox"],
               ext["r"], ext["s"], stride)
    grid = rng.choice(((2, 2), (4, 2), (4, 4)))
    glb_t = {d: _divisor(rng, ext[d]) for d in dims}
    s, sx, sy = _spatial_pick(rng, dims, glb_t, grid)
    rf_t = {d: 1 for d in dims}
    orders = [rng.sample(dims, len(dims)) for _ in range(3)]
    connects = [{"rel": rng.choice(CONNECT_POOL),
                 **({"array": rng.choice("OIW")} if rng.random() < 0.5 else {})}
                for _ in range(rng.randrange(3))]
    if sx in ("c", "r", "s") or sy in ("c", "r", "s"):
        connects.append({"rel": "{[x, y] -> [x, y - 1]}", "array": "O"})
    arch = _arch(rng, grid, connects)
    m = mapping_from_dict({"levels": [
        {"level": "dram", "temporal_order": orders[0], "temporal_tile": dict(ext)},
        {"level": "glb", "temporal_order": orders[1], "temporal_tile": glb_t,
         "spatial_tile": s,
         **({"space_x": sx} if sx else {}), **({"space_y": sy} if sy else {})},
        {"level": "rf", "temporal_order": orders[2], "temporal_tile": rf_t},
    ]})
    return w, arch, m


def _run_case(w, arch, m, label):
    if check_legality(m, arch, w):
        pytest.skip("generator produced an illegal corner")
    tree = build_schedule_tree(m, w, arch)
    oracle = simulate(tree, w, arch)
    fast = evaluate(w, arch, m, method="fast")
    relation = evaluate(w, arch, m, method="relation")
    assert diff(fast.volumes, oracle.volumes) == [], label
    assert diff(relation.volumes, oracle.volumes) == [], label
    assert oracle.mean_active == fast.act_pe, label


@pytest.mark.parametrize("seed", range(40))
def test_gemm_fuzz(seed):
    rng = random.Random(1000 + seed)
    w, arch, m = _gemm_case(rng)
    _run_case(w, arch, m, f"gemm seed {seed}")


@pytest.mark.parametrize("seed", range(25))
def test_conv_fuzz(seed):
    rng = random.Random(2000 + seed)
    w, arch, m = _conv_case(rng)
    _run_case(w, arch, m, f"conv seed {seed}")
