"""Reuse volumes, utilization, energy and execution-time estimation.

Every placement entering a level from its parent is classified into exactly
one of four kinds, in this priority order:

  TV   the same unit already held the element at the immediately preceding
       time step of the level (temporal reuse);
  TSV  a connect-neighbor held it at the preceding step and forwards it
       point to point (temporal-spatial reuse);
  SV   the element arrives in a multicast group: among the placements left
       over at one time step, those sharing (element, feeding parent
       placement) form a group of size g contributing g - 1 here;
  UV   the remaining fetches (one representative per multicast group).

TV + SV + TSV + UV == Total is an identity of the classification.

Two evaluators produce identical counts: `reuse_volumes` works on a
materialized inter-level placement relation (desk scale, enumeration budget
applies), while the carry-class evaluator collapses the schedule's time steps
into lexicographic-decrement classes.  All per-step structures are translates
of each other, so per-class counts are exact and full-size workloads cost
only (number of classes) x (one representative step).

Cycle and energy models: compute time is total MACs over mean active PEs
times the MAC latency; DRAM time follows a DMA model with a startup cost per
invocation and a per-byte cost on each operand's unique volume; on-chip time
multicasts SV and unicasts the rest of the leaf traffic across the data bus;
communication pipelines with compute, so the total is a max, not a sum.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import namedtuple
from dataclasses import dataclass, field
from fractions import Fraction

from .arch import ArchSpec
from .errors import BudgetError, ConfigError, StructuralError
from .intset import IntRelation, IntSet, element_budget, lex_closest_pred
from .mapping import Mapping, ScheduleTree, build_schedule_tree
from .placement import InterLevelPlacement, inter_level
from .workload import READ, Workload

VolumeCounts = namedtuple("VolumeCounts", "tv sv tsv uv total")

REUSE_PRIORITY = "TV > TSV > SV"


class VolumeReport:
    """Per (level, array) volume counts, deterministic iteration order."""

    def __init__(self, levels, arrays):
        self.levels = tuple(levels)   # non-root levels, top first
        self.arrays = tuple(arrays)
        self.counts = {}

    def set(self, level, array, counts: VolumeCounts):
        self.counts[(level, array)] = counts

    def get(self, level, array) -> VolumeCounts:
        return self.counts[(level, array)]

    def items(self):
        for level in self.levels:
            for array in self.arrays:
                if (level, array) in self.counts:
                    yield (level, array), self.counts[(level, array)]

    def __eq__(self, other):
        return isinstance(other, VolumeReport) and dict(self.items()) == dict(other.items())


# --------------------------------------------------------------------------
# Relation-based evaluator (desk scale)
# --------------------------------------------------------------------------

def reuse_volumes(theta_inter: InterLevelPlacement, connect: IntRelation | None) -> VolumeCounts:
    """Classify a materialized inter-level placement against a connect relation."""
    rel = theta_inter.rel
    shape = rel.out_shape
    if shape.kind != "pair" or shape.left.kind != "pair" or shape.right.kind != "pair":
        raise StructuralError("inter-level placement must have a doubly wrapped range")
    sp_a = shape.left.left.arity
    tp_a = shape.left.right.arity
    sc_a = shape.right.left.arity

    placements = set()   # (element, sc, tc)
    stamps = set()
    child_units = set()
    entries = []
    for p, flat in rel.pairs:
        sp = flat[:sp_a]
        tp = flat[sp_a:sp_a + tp_a]
        sc = flat[sp_a + tp_a:sp_a + tp_a + sc_a]
        tc = flat[sp_a + tp_a + sc_a:]
        placements.add((p, sc, tc))
        stamps.add(tc)
        child_units.add(sc)
        entries.append((p, sp, tp, sc, tc))

    if connect is not None and len(connect) and connect.in_arity != sc_a:
        if child_units <= {(1,)}:
            connect = None  # spatially unsplit level: grid links are inert
        else:
            raise StructuralError(
                f"connect arity {connect.in_arity} != child space-stamp arity {sc_a}")

    pred = {a: b for a, b in lex_closest_pred(IntSet(stamps)).pairs}

    feeders = {}
    if connect is not None:
        for a, b in connect.pairs:
            feeders.setdefault(b, []).append(a)

    tv = tsv = sv = uv = 0
    groups = {}
    for p, sp, tp, sc, tc in entries:
        prev = pred.get(tc)
        if prev is not None and (p, sc, prev) in placements:
            tv += 1
            continue
        if prev is not None and any((p, f, prev) in placements for f in feeders.get(sc, ())):
            tsv += 1
            continue
        groups[(p, sp, tp, tc)] = groups.get((p, sp, tp, tc), 0) + 1
    for g in groups.values():
        uv += 1
        sv += g - 1
    return VolumeCounts(tv, sv, tsv, uv, len(rel))


# --------------------------------------------------------------------------
# Carry-class evaluator (any scale)
# --------------------------------------------------------------------------

def _minkowski(residual, terms, const):
    values = {const}
    for coef, dim in terms:
        values = {v + coef * q for v in values for q in range(residual[dim])}
    return frozenset(values)


@dataclass
class _Descriptor:
    """Translate structure of one array at one level.

    Per array index: a fixed offset set (the residual tile image) plus affine
    time/unit contributions.  Every step's element set is a translate of the
    product of the offset sets.
    """

    offset_sets: list
    time_coefs: list      # per index: tuple of per-time-counter strides
    unit_offsets: dict    # unit tuple -> per-index offset vector


def _descriptor(tree: ScheduleTree, w: Workload, array: str, level: str) -> _Descriptor:
    acc = w.accesses_of(array)
    first = acc[0]
    for a in acc[1:]:
        if a.index_terms != first.index_terms or a.index_consts != first.index_consts:
            raise ConfigError(
                f"array '{array}': access maps differ between references; "
                f"use the relation evaluator")
    residual = tree.residual(level)
    time_entries = tree.time_entries_upto(level)
    offset_sets = []
    time_coefs = []
    for terms, const in zip(first.index_terms, first.index_consts):
        offset_sets.append(_minkowski(residual, terms, const))
        coef_of = {dim: coef for coef, dim in terms}
        time_coefs.append(tuple(coef_of.get(e.dim, 0) * e.stride for e in time_entries))
    units = tree.units_of(level)
    has_units = bool(tree.splits_above(level))
    unit_offsets = {}
    for u in units:
        contrib = tree.unit_contrib(level, u) if has_units else {}
        vec = []
        for terms, _ in zip(first.index_terms, first.index_consts):
            vec.append(sum(coef * contrib.get(dim, 0) for coef, dim in terms))
        unit_offsets[u] = tuple(vec)
    return _Descriptor(offset_sets, time_coefs, unit_offsets)


def _carry_classes(time_entries):
    """(count, delta-coefficient-selector) per lexicographic-decrement class.

    Class j covers steps whose predecessor decrements counter j and resets
    all deeper counters to their maxima; the first step has no predecessor.
    """
    extents = [e.extent for e in time_entries]
    m = len(extents)
    classes = []
    for j in range(m):
        count = 1
        for i in range(j):
            count *= extents[i]
        count *= extents[j] - 1
        if count:
            classes.append((j, count))
    return classes


def _class_delta(time_coefs, extents, j):
    """Per-index element-space shift from a step to its class-j predecessor."""
    out = []
    for coefs in time_coefs:
        d = -coefs[j]
        for i in range(j + 1, len(coefs)):
            d += (extents[i] - 1) * coefs[i]
        out.append(d)
    return tuple(out)


def volumes_by_class(tree: ScheduleTree, w: Workload, arch: ArchSpec,
                     array: str, level: str, budget=None) -> VolumeCounts:
    """Exact volume counts without enumerating time steps."""
    desc = _descriptor(tree, w, array, level)
    time_entries = tree.time_entries_upto(level)
    extents = [e.extent for e in time_entries]
    n_steps = 1
    for n in extents:
        n_steps *= n
    units = tree.units_of(level)
    elems_per_step = 1
    for s in desc.offset_sets:
        elems_per_step *= len(s)
    total = n_steps * len(units) * elems_per_step
    classes = _carry_classes(time_entries)

    if len(units) == 1:
        tv = 0
        for j, count in classes:
            delta = _class_delta(desc.time_coefs, extents, j)
            overlap = 1
            for s, d in zip(desc.offset_sets, delta):
                overlap *= len(s & {v + d for v in s})
            tv += count * overlap
        return VolumeCounts(tv, 0, 0, total - tv, total)

    limit = element_budget(budget)
    work = (len(classes) + 1) * len(units) * elems_per_step
    if work > limit:
        raise BudgetError(
            f"carry-class evaluation at '{level}' needs {work} element visits, "
            f"over the budget of {limit}; shrink the level's tiles")

    f_tuples = [tuple(t) for t in itertools.product(*[sorted(s) for s in desc.offset_sets])]
    needed = {}
    for u in units:
        off = desc.unit_offsets[u]
        needed[u] = [tuple(v + o for v, o in zip(t, off)) for t in f_tuples]

    connect = arch.connect_relation(level, array=array)
    unit_arity = tree.unit_arity(level)
    feeders = {}
    if len(connect):
        if connect.in_arity != unit_arity:
            raise StructuralError(
                f"level '{level}': connect arity {connect.in_arity} does not match "
                f"unit coordinate arity {unit_arity}")
        unitset = set(units)
        for a, b in connect.pairs:
            if a in unitset and b in unitset:
                feeders.setdefault(b, []).append(a)

    prefix = tree.parent_unit_arity(level)

    def classify(prev_sets):
        tv = tsv = sv = uv = 0
        groups = {}
        for u in units:
            own_prev = prev_sets.get(u)
            feed_prev = [prev_sets[f] for f in feeders.get(u, ()) if f in prev_sets]
            key_u = u[:prefix]
            for e in needed[u]:
                if own_prev is not None and e in own_prev:
                    tv += 1
                elif any(e in fp for fp in feed_prev):
                    tsv += 1
                else:
                    k = (e, key_u)
                    groups[k] = groups.get(k, 0) + 1
        for g in groups.values():
            uv += 1
            sv += g - 1
        return tv, tsv, sv, uv

    tv = tsv = sv = uv = 0
    # first step of the whole schedule: nothing is resident yet
    ftv, ftsv, fsv, fuv = classify({})
    tv += ftv
    tsv += ftsv
    sv += fsv
    uv += fuv
    for j, count in classes:
        delta = _class_delta(desc.time_coefs, extents, j)
        prev_sets = {
            u: {tuple(v + d for v, d in zip(e, delta)) for e in needed[u]}
            for u in units}
        ctv, ctsv, csv, cuv = classify(prev_sets)
        tv += count * ctv
        tsv += count * ctsv
        sv += count * csv
        uv += count * cuv

    counts = VolumeCounts(tv, sv, tsv, uv, total)
    assert counts.tv + counts.sv + counts.tsv + counts.uv == counts.total
    return counts


# --------------------------------------------------------------------------
# Report-level drivers
# --------------------------------------------------------------------------

def volume_report(tree: ScheduleTree, w: Workload, arch: ArchSpec,
                  method: str = "fast", budget=None) -> VolumeReport:
    """Volumes for every array at every non-root level."""
    if method not in ("fast", "relation"):
        raise ConfigError(f"unknown volume method '{method}'")
    names = [lv.name for lv in arch.levels]
    report = VolumeReport(names[1:], w.arrays)
    for parent, child in zip(names, names[1:]):
        for array in w.arrays:
            crossed = arch.cross_level_connect(parent, child, array) is not None
            if method == "relation" or crossed:
                ti = inter_level(tree, w, array, parent, child, arch=arch, budget=budget)
                connect = arch.connect_relation(child, array=array)
                counts = reuse_volumes(ti, connect)
            else:
                counts = volumes_by_class(tree, w, arch, array, child, budget=budget)
            report.set(child, array, counts)
    return report


def utilization(tree: ScheduleTree, arch: ArchSpec) -> Fraction:
    """Mean active MAC fraction; 1 when the space bands cover the whole grid."""
    return Fraction(tree.active_units(), arch.params.pe_size)


@dataclass
class EnergyBreakdown:
    mac: Fraction
    dram: Fraction
    connect: Fraction
    on_chip: dict  # level name -> Fraction

    @property
    def total(self) -> Fraction:
        return self.mac + self.dram + self.connect + sum(self.on_chip.values(), Fraction(0))


def energy_breakdown(volumes: VolumeReport, arch: ArchSpec, w: Workload,
                     util: Fraction) -> EnergyBreakdown:
    """Static energy model over the volume counts.

    MAC energy splits into active and idle parts by utilization; each on-chip
    level pays writes on its own unique volume and reads serving its child's
    unique plus temporal volumes (the MAC consumption plays the child role
    below the leaf level); DRAM pays for the top level's traffic; multicast
    and point-to-point forwards pay per-datum interconnect energies.
    """
    p = arch.params
    for name in ("e_act", "e_idle", "e_multi", "e_inter"):
        if getattr(p, name) is None:
            raise ConfigError(f"params.{name} required for energy estimation")
    total_mac = w.domain_size
    util = Fraction(util)
    e_mac = (util * Fraction(p.e_act) + (1 - util) * Fraction(p.e_idle)) * total_mac

    phys = arch.physical_levels()
    on_chip = {}
    for i, lv in enumerate(phys[1:], start=1):
        child = phys[i + 1] if i + 1 < len(phys) else None
        acc = Fraction(0)
        for array in w.arrays:
            uv_own = volumes.get(lv.name, array).uv
            if child is not None:
                c = volumes.get(child.name, array)
                reads = c.uv + c.tv
            else:
                reads = total_mac * len(w.accesses_of(array, kinds=(READ,)))
            acc += Fraction(lv.write_energy) * uv_own + Fraction(lv.read_energy) * reads
        on_chip[lv.name] = acc

    root = phys[0]
    top = phys[1] if len(phys) > 1 else None
    e_dram = Fraction(0)
    if top is not None:
        for array in w.arrays:
            c = volumes.get(top.name, array)
            e_dram += (Fraction(root.write_energy) * c.uv
                       + Fraction(root.read_energy) * (c.uv + c.tv))

    e_connect = Fraction(0)
    for (level, array), c in volumes.items():
        e_connect += Fraction(p.e_multi) * c.sv + Fraction(p.e_inter) * c.tsv

    return EnergyBreakdown(e_mac, e_dram, e_connect, on_chip)


@dataclass
class CycleBreakdown:
    comp: int
    dram: int
    on_chip: int
    comm: int
    total: int
    dma_per_operand: dict = field(default_factory=dict)


def cycle_breakdown(volumes: VolumeReport, arch: ArchSpec, w: Workload,
                    tree: ScheduleTree) -> CycleBreakdown:
    p = arch.params
    if not p.bus_width_B:
        raise ConfigError("params.bus_width_B must be nonzero")
    if not p.f_dma:
        raise ConfigError("params.f_dma must be nonzero")

    # compute: total MACs over mean active PEs, times MAC latency
    comp = tree.leaf_step_count() * Fraction(p.lat_avg)

    phys = arch.physical_levels()
    top = phys[1] if len(phys) > 1 else None
    reqs = 1
    for e in tree.nodes(arch.root.name).time_entries:
        reqs *= e.extent
    freq_ratio = Fraction(p.f_accel) / Fraction(p.f_dma)
    dma = {}
    dram_total = Fraction(0)
    if top is not None:
        for array in w.arrays:
            uv_bytes = Fraction(volumes.get(top.name, array).uv * w.element_bits, 8)
            cycles = (reqs * Fraction(p.dma_init)
                      + Fraction(p.dma_bytes_per_cycle_inv) * uv_bytes) * freq_ratio
            dma[array] = cycles
            dram_total += cycles

    leaf = phys[-1]
    bus = Fraction(p.bus_width_B)
    on_chip = Fraction(0)
    if len(phys) > 1:
        for array in w.arrays:
            c = volumes.get(leaf.name, array)
            on_chip += Fraction(c.sv) / bus
            on_chip += Fraction(max(c.total - c.sv - c.tv, 0)) / bus

    comm = max(dram_total, on_chip)
    comp_i = math.ceil(comp)
    comm_i = math.ceil(comm)
    return CycleBreakdown(
        comp=comp_i,
        dram=math.ceil(dram_total),
        on_chip=math.ceil(on_chip),
        comm=comm_i,
        total=max(comp_i, comm_i),
        dma_per_operand={a: math.ceil(v) for a, v in dma.items()},
    )


@dataclass
class CostReport:
    workload: Workload
    arch: ArchSpec
    utilization: Fraction
    act_pe: int
    total_mac: int
    cycles: CycleBreakdown
    energy: EnergyBreakdown
    volumes: VolumeReport
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        vols = {}
        for (level, array), c in self.volumes.items():
            vols.setdefault(level, {})[array] = {
                "TV": c.tv, "SV": c.sv, "TSV": c.tsv, "UV": c.uv, "Total": c.total}
        energy = {
            "mac": _e(self.energy.mac),
            "dram": _e(self.energy.dram),
            "connect": _e(self.energy.connect),
            "on_chip": {k: _e(v) for k, v in self.energy.on_chip.items()},
            "total": _e(self.energy.total),
        }
        prov = dict(self.provenance)
        prov.setdefault("tool", "mapcost 0.1.0")
        prov.setdefault("reuse_priority", REUSE_PRIORITY)
        return {
            "workload": {
                "name": self.workload.name,
                "dims": {d.name: d.extent for d in self.workload.dims},
                "element_bits": self.workload.element_bits,
            },
            "utilization": float(self.utilization),
            "act_pe_avg": self.act_pe,
            "total_mac": self.total_mac,
            "cycles": {
                "comp": self.cycles.comp,
                "dram": self.cycles.dram,
                "on_chip": self.cycles.on_chip,
                "comm": self.cycles.comm,
                "total": self.cycles.total,
                "dma_per_operand": dict(sorted(self.cycles.dma_per_operand.items())),
            },
            "energy_pJ": energy,
            "volumes": vols,
            "provenance": prov,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def volume_csv_rows(self):
        yield ("level", "array", "TV", "SV", "TSV", "UV", "Total")
        for (level, array), c in self.volumes.items():
            yield (level, array, c.tv, c.sv, c.tsv, c.uv, c.total)

    def energy_csv_rows(self):
        yield ("component", "energy_pJ")
        yield ("mac", f"{float(self.energy.mac):.6f}")
        for level, v in self.energy.on_chip.items():
            yield (f"on_chip:{level}", f"{float(v):.6f}")
        yield ("dram", f"{float(self.energy.dram):.6f}")
        yield ("connect", f"{float(self.energy.connect):.6f}")
        yield ("total", f"{float(self.energy.total):.6f}")


def _e(v: Fraction) -> float:
    return round(float(v), 6)


def evaluate(w: Workload, arch: ArchSpec, mapping: Mapping,
             method: str = "fast", budget=None, provenance=None) -> CostReport:
    """Full pipeline: legality gate, schedule tree, volumes, cost models."""
    tree = build_schedule_tree(mapping, w, arch)
    vols = volume_report(tree, w, arch, method=method, budget=budget)
    util = utilization(tree, arch)
    energy = energy_breakdown(vols, arch, w, util)
    cycles = cycle_breakdown(vols, arch, w, tree)
    return CostReport(
        workload=w,
        arch=arch,
        utilization=util,
        act_pe=tree.active_units(),
        total_mac=w.domain_size,
        cycles=cycles,
        energy=energy,
        volumes=vols,
        provenance=dict(provenance or {}),
    )
