"""Acceptance criteria, one test per criterion, one PASS line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines.  Tolerances are zero everywhere: counts are exact integers, ratios are
exact fractions, and cycle/energy identities are checked in rational
arithmetic.
"""

import json
import random
import time
from fractions import Fraction

import pytest
from conftest import (GEMM_ORDER, c7, desk_scale_cases, g, lvl, mk_mapping,
                      three_level_arch)

from mapcost import (IntRelation, IntSet, build_schedule_tree, check_legality,
                     compose, conv2d, evaluate, eyeriss_like, gemm, lex_closest_pred,
                     lex_lt, load_workload, parse_arch, parse_mapping, utilization)
from mapcost.cli import EXIT_LEGALITY, SUITES, builtin_config, main
from mapcost.oracle import diff, simulate

CONV_ORDER = ("n", "k", "c", "oy", "ox", "r", "s")


def _ok(n, name):
    print(f"\nACCEPTANCE {n} ({name}): PASS")


def test_criterion_1_oracle_equivalence():
    t0 = time.monotonic()
    for name, w, arch, m in desk_scale_cases():
        tree = build_schedule_tree(m, w, arch)
        oracle = simulate(tree, w, arch)
        fast = evaluate(w, arch, m, method="fast")
        relation = evaluate(w, arch, m, method="relation")
        assert diff(fast.volumes, oracle.volumes) == [], name
        assert diff(relation.volumes, oracle.volumes) == [], name
    elapsed = time.monotonic() - t0
    assert elapsed < 30.0, f"equivalence fleet took {elapsed:.1f}s"
    _ok(1, f"oracle equivalence, {elapsed:.2f}s")


def test_criterion_2_ideal_execution_time():
    w = load_workload("gemm-256")
    arch = parse_arch(builtin_config("arch_gemm_os_8x8_ample.yaml"))
    m = parse_mapping(builtin_config("map_gemm_os_8x8.yaml"))
    report = evaluate(w, arch, m)
    ideal = (256 ** 3 // 64) * 1  # total MACs / PEs, lat_avg = 1
    assert report.cycles.total == ideal
    assert report.utilization == 1
    assert float(report.utilization) == 1.0
    _ok(2, f"ideal execution time == {ideal}")


def test_criterion_3_partition_on_shipped_benchmarks():
    for suite in ("gemm", "conv"):
        for name, workload, arch_cfg, map_cfg in SUITES[suite]:
            w = load_workload(workload)
            arch = parse_arch(builtin_config(arch_cfg))
            m = parse_mapping(builtin_config(map_cfg))
            report = evaluate(w, arch, m, method="fast")
            for (level, array), c in report.volumes.items():
                assert c.tv + c.sv + c.tsv + c.uv == c.total, (name, level, array)
                assert min(c) >= 0, (name, level, array)
    _ok(3, "TV+SV+TSV+UV == Total on all six benchmarks")


def test_criterion_4_utilization_vs_oracle_scaled_rs():
    # 4x-scaled-down conv layer on the 14x12 row-stationary array
    w = conv2d(1, 8, 12, 14, 7, 5, 5, 1)
    arch = eyeriss_like()
    m = mk_mapping(
        lvl("dram", CONV_ORDER, c7(1, 8, 12, 14, 7, 5, 5)),
        lvl("glb", CONV_ORDER, c7(1, 8, 12, 14, 7, 5, 5)),
        lvl("noc", CONV_ORDER, c7(1, 2, 12, 14, 7, 5, 5),
            S=c7(1, 2, 12, 1, 7, 1, 5), sx="oy", sy="r"),
        lvl("rf", CONV_ORDER, c7(1, 1, 1, 1, 1, 1, 1)),
    )
    assert check_legality(m, arch, w) == []
    tree = build_schedule_tree(m, w, arch)
    analytical = utilization(tree, arch)
    oracle = simulate(tree, w, arch)
    oracle_fraction = oracle.mean_active / arch.params.pe_size
    assert analytical == oracle_fraction == Fraction(70, 168)
    _ok(4, f"utilization {analytical} matches oracle exactly")


def _random_legal_gemm(rng):
    ext = {d: rng.choice((2, 4, 8)) for d in "ijk"}
    w = gemm(ext["i"], ext["j"], ext["k"])
    grid = rng.choice(((2, 2), (4, 4), (4, 2), (2, 1)))

    def div(n):
        return rng.choice([d for d in (1, 2, 4, 8) if n % d == 0 and d <= n])

    t = {d: div(ext[d]) if rng.random() < 0.7 else ext[d] for d in "ijk"}
    s = dict(t)
    px = rng.choice([p for p in (1, 2, 4) if t["i"] % p == 0 and p <= grid[0]])
    py = rng.choice([p for p in (1, 2, 4) if t["j"] % p == 0 and p <= grid[1]])
    s["i"] //= px
    s["j"] //= py
    params = {
        "e_act": rng.choice((0.0, 0.5, 1.5)), "e_idle": rng.choice((0.0, 0.3)),
        "e_multi": rng.choice((0.0, 0.2)), "e_inter": rng.choice((0.0, 0.4)),
        "lat_avg": rng.choice((1, 2)), "bus_width_B": rng.choice((1, 4, 64)),
        "f_accel": 1.0e9, "f_dma": rng.choice((5.0e8, 1.0e9)),
        "dma_init": rng.choice((0, 10)),
    }
    arch = three_level_arch(grid=grid, params=params, rf_cap=4096, glb_cap=1 << 20)
    m = mk_mapping(
        lvl("dram", GEMM_ORDER, g(ext["i"], ext["j"], ext["k"])),
        lvl("glb", GEMM_ORDER, dict(t), S=s,
            sx="i" if px > 1 else None, sy="j" if py > 1 else None),
        lvl("rf", GEMM_ORDER, g(1, 1, 1)),
    )
    return w, arch, m


def test_criterion_5_algebraic_identities():
    rng = random.Random(20260810)
    for case in range(100):
        w, arch, m = _random_legal_gemm(rng)
        assert check_legality(m, arch, w) == [], f"case {case} not legal by construction"
        r = evaluate(w, arch, m)
        assert r.cycles.total == max(r.cycles.comp, r.cycles.comm), f"case {case}"
        assert r.cycles.comm == max(r.cycles.dram, r.cycles.on_chip), f"case {case}"
        for _, c in r.volumes.items():
            assert c.tv + c.sv + c.tsv + c.uv == c.total

    # zero coefficients -> zero energy
    import yaml
    from mapcost import arch_from_dict, render_arch
    w = gemm(8, 8, 8)
    zero_arch = three_level_arch(
        grid=(4, 4), params={k: 0.0 for k in ("e_act", "e_idle", "e_multi", "e_inter")})
    doc = yaml.safe_load(render_arch(zero_arch))
    for lv in doc["levels"]:
        lv["read_energy"] = 0.0
        lv["write_energy"] = 0.0
    zero_arch = arch_from_dict(doc)
    m = mk_mapping(
        lvl("dram", GEMM_ORDER, g(8, 8, 8)),
        lvl("glb", GEMM_ORDER, g(4, 4, 8), S=g(1, 1, 8), sx="i", sy="j"),
        lvl("rf", GEMM_ORDER, g(1, 1, 1)))
    assert evaluate(w, zero_arch, m).energy.total == 0

    # e_idle == e_act makes MAC energy independent of utilization
    eq_arch = three_level_arch(grid=(4, 4), params={"e_act": 0.9, "e_idle": 0.9})
    full = mk_mapping(
        lvl("dram", GEMM_ORDER, g(8, 8, 8)),
        lvl("glb", GEMM_ORDER, g(4, 4, 8), S=g(1, 1, 8), sx="i", sy="j"),
        lvl("rf", GEMM_ORDER, g(1, 1, 1)))
    quarter = mk_mapping(
        lvl("dram", GEMM_ORDER, g(8, 8, 8)),
        lvl("glb", GEMM_ORDER, g(2, 2, 8), S=g(1, 1, 8), sx="i", sy="j"),
        lvl("rf", GEMM_ORDER, g(1, 1, 1)))
    r1 = evaluate(gemm(8, 8, 8), eq_arch, full)
    r2 = evaluate(gemm(8, 8, 8), eq_arch, quarter)
    assert r1.utilization == 1 and r2.utilization == Fraction(4, 16)
    assert r1.energy.mac == r2.energy.mac
    _ok(5, "max/zero/idle identities over 100 randomized cases")


def test_criterion_6_legality_gate(tmp_path, capsys):
    w = gemm(8, 8, 8)
    arch = three_level_arch(grid=(4, 4), rf_cap=16)

    over_parallel = mk_mapping(
        lvl("dram", GEMM_ORDER, g(8, 8, 8)),
        lvl("glb", GEMM_ORDER, g(8, 8, 8), S=g(1, 8, 8), sx="i"),
        lvl("rf", GEMM_ORDER, g(1, 1, 1)))
    capacity_overflow = mk_mapping(
        lvl("dram", GEMM_ORDER, g(8, 8, 8)),
        lvl("glb", GEMM_ORDER, g(4, 4, 8), S=g(1, 1, 8), sx="i", sy="j"),
        lvl("rf", GEMM_ORDER, g(1, 1, 8)))
    broken_tiling = mk_mapping(
        lvl("dram", GEMM_ORDER, g(8, 8, 8)),
        lvl("glb", GEMM_ORDER, g(3, 8, 8)),
        lvl("rf", GEMM_ORDER, g(1, 1, 1)))

    for m, rule in ((over_parallel, "parallelism"),
                    (capacity_overflow, "capacity"),
                    (broken_tiling, "divisibility")):
        violations = check_legality(m, arch, w)
        assert violations and violations[0].rule == rule

    # and through the CLI: exit code 2 with the rule identifier on stderr
    from mapcost import render_arch
    a = tmp_path / "arch.yaml"
    a.write_text(render_arch(arch))
    wl = tmp_path / "w.yaml"
    wl.write_text("op: gemm\ndims: {i: 8, j: 8, k: 8}\n")
    mp = tmp_path / "m.yaml"
    mp.write_text("""
levels:
  - {level: dram, temporal_order: [i, j, k], temporal_tile: {i: 8, j: 8, k: 8}}
  - {level: glb, temporal_order: [i, j, k], temporal_tile: {i: 8, j: 8, k: 8},
     spatial_tile: {i: 1, j: 8, k: 8}, space_x: i}
  - {level: rf, temporal_order: [i, j, k], temporal_tile: {i: 1, j: 1, k: 1}}
""")
    rc = main(["check", "--arch", str(a), "--mapping", str(mp), "--workload", str(wl)])
    assert rc == EXIT_LEGALITY
    assert "parallelism" in capsys.readouterr().err
    _ok(6, "three canonical illegal mappings rejected with correct rules")


def test_criterion_7_determinism(tmp_path):
    a = tmp_path / "arch.yaml"
    a.write_text(builtin_config("arch_gemm_os_8x8.yaml"))
    mp = tmp_path / "map.yaml"
    mp.write_text(builtin_config("map_gemm_os_8x8.yaml"))
    out1, out2 = str(tmp_path / "r1.json"), str(tmp_path / "r2.json")
    for out in (out1, out2):
        assert main(["analyze", "--arch", str(a), "--mapping", str(mp),
                     "--workload", "gemm-256", "-o", out]) == 0
    b1, b2 = open(out1, "rb").read(), open(out2, "rb").read()
    assert b1 == b2
    json.loads(b1.decode())
    _ok(7, "repeated analyze runs are byte-identical")


def test_criterion_8_hardware_deltas_not_reproducible():
    print("\nACCEPTANCE 8 (hardware validation deltas): NOT REPRODUCIBLE AT DESK "
          "SCALE - comparing against measured silicon and third-party frameworks "
          "requires data that is not shipped here; criteria 1-5 stand in.")
    pytest.skip("requires measured hardware data; replaced by criteria 1-5")


def _rand_set(rng, arity, lo=-3, hi=4, max_size=8):
    n = rng.randrange(max_size + 1)
    return IntSet([tuple(rng.randrange(lo, hi) for _ in range(arity))
                   for _ in range(n)], arity=arity)


def _rand_rel(rng, in_a, out_a, max_size=8):
    n = rng.randrange(max_size + 1)
    return IntRelation(
        [(tuple(rng.randrange(-2, 3) for _ in range(in_a)),
          tuple(rng.randrange(-2, 3) for _ in range(out_a)))
         for _ in range(n)], in_arity=in_a, out_arity=out_a)


def test_criterion_9_intrel_property_suite():
    cases = 1000

    rng = random.Random(1)
    for _ in range(cases):
        a, b, c = (_rand_rel(rng, 1, 1) for _ in range(3))
        assert compose(compose(a, b), c) == compose(a, compose(b, c))

    rng = random.Random(2)
    for _ in range(cases):
        r = _rand_rel(rng, 2, 1)
        assert r.inverse().inverse() == r

    rng = random.Random(3)
    for _ in range(cases):
        a, b = _rand_set(rng, 2), _rand_set(rng, 2)
        assert (a | b).cardinality + (a & b).cardinality == \
            a.cardinality + b.cardinality

    rng = random.Random(4)
    for _ in range(cases):
        s = _rand_set(rng, 2)
        pred = lex_closest_pred(s)
        assert pred.cardinality == max(s.cardinality - 1, 0)
        lt = set(lex_lt(s).pairs)
        assert all(p in lt for p in pred.inverse().pairs)

    _ok(9, f"four property suites x {cases} randomized cases")
