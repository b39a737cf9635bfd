"""Brute-force trace oracle.

Replays the schedule level by level: at every time step of a level it
enumerates, per unit, the loop instances of the resident tile, applies the
access functions pointwise to find the required elements, and classifies each
placement against the residency of the previous step (same unit first, then
connect neighbors, then multicast grouping by feeding parent).  Residency is
schedule-determined: after classification a unit holds exactly the step's
tile, nothing else.

This module deliberately shares no counting or classification code with the
analysis module; agreement between the two is the ground-truth check for the
analytical path at desk scale.  Work grows with the full iteration domain, so
runs are capped by a leaf-step budget (default 2**20).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .analysis import VolumeCounts, VolumeReport
from .arch import ArchSpec
from .errors import BudgetError
from .mapping import ScheduleTree
from .workload import Workload

DEFAULT_STEP_BUDGET = 1 << 20


@dataclass
class OracleResult:
    volumes: VolumeReport
    active_pe: list          # active unit count per leaf-band time step
    leaf_steps: int          # full leaf step count (including intra loops)

    @property
    def mean_active(self) -> Fraction:
        if not self.active_pe:
            return Fraction(0)
        return Fraction(sum(self.active_pe), len(self.active_pe))


def _compiled_access(w: Workload, array):
    """Access maps as (const, ((coef, dim_position), ...)) rows, deduplicated."""
    pos = {n: i for i, n in enumerate(w.dim_names)}
    maps = []
    for a in w.accesses_of(array):
        rows = tuple(
            (const, tuple((coef, pos[d]) for coef, d in terms))
            for terms, const in zip(a.index_terms, a.index_consts))
        if rows not in maps:
            maps.append(rows)
    return maps


def _tile_elements(maps, base_vec, offset_grid):
    out = set()
    for offs in offset_grid:
        pt = tuple(b + o for b, o in zip(base_vec, offs))
        for rows in maps:
            out.add(tuple(const + sum(c * pt[i] for c, i in terms)
                          for const, terms in rows))
    return out


def simulate(tree: ScheduleTree, w: Workload, arch: ArchSpec,
             step_budget: int | None = None, event_log=None) -> OracleResult:
    """Replay every level; returns per-(level, array) counts and PE activity."""
    budget = DEFAULT_STEP_BUDGET if step_budget is None else step_budget
    leaf_steps = tree.leaf_step_count()
    if leaf_steps > budget:
        raise BudgetError(f"oracle: {leaf_steps} leaf steps over the budget of {budget}")

    names = [lv.name for lv in arch.levels]
    report = VolumeReport(names[1:], w.arrays)
    active_series = []
    dim_names = w.dim_names
    compiled = {array: _compiled_access(w, array) for array in w.arrays}

    for level in names[1:]:
        time_entries = tree.time_entries_upto(level)
        units = tree.units_of(level)
        residual = tree.residual(level)
        offset_grid = list(itertools.product(*[range(residual[d]) for d in dim_names]))

        has_units = bool(tree.splits_above(level))
        unit_vecs = {}
        for u in units:
            contrib = tree.unit_contrib(level, u) if has_units else {}
            unit_vecs[u] = tuple(contrib.get(d, 0) for d in dim_names)
        feeders = {}
        for array in w.arrays:
            rel = arch.connect_relation(level, array=array)
            fmap = {}
            for a, b in rel.pairs:
                fmap.setdefault(b, []).append(a)
            feeders[array] = fmap
        prefix = tree.parent_unit_arity(level)

        counts = {array: [0, 0, 0, 0, 0] for array in w.arrays}  # tv sv tsv uv total
        resident = {array: {} for array in w.arrays}             # unit -> element set
        is_leaf_level = level == names[-1]
        entry_pos = [dim_names.index(e.dim) for e in time_entries]

        for counters in itertools.product(*[range(e.extent) for e in time_entries]):
            base_t = [0] * len(dim_names)
            for pos_i, e, c in zip(entry_pos, time_entries, counters):
                base_t[pos_i] += e.stride * c
            needed_all = {}
            active_here = 0
            for u in units:
                base_vec = tuple(b + o for b, o in zip(base_t, unit_vecs[u]))
                per_array = {
                    array: _tile_elements(compiled[array], base_vec, offset_grid)
                    for array in w.arrays}
                needed_all[u] = per_array
                if any(per_array.values()):
                    active_here += 1
            if is_leaf_level:
                active_series.append(active_here)

            for array in w.arrays:
                res = resident[array]
                fmap = feeders[array]
                tally = counts[array]
                groups = {}
                for u in units:
                    need = needed_all[u][array]
                    own = res.get(u, ())
                    neighbor_sets = [res[f] for f in fmap.get(u, ()) if f in res]
                    key_u = u[:prefix]
                    for el in sorted(need):
                        tally[4] += 1
                        if el in own:
                            tally[0] += 1
                            kind = "TV"
                        elif any(el in ns for ns in neighbor_sets):
                            tally[2] += 1
                            kind = "TSV"
                        else:
                            groups.setdefault((el, key_u), []).append(u)
                            kind = None
                        if event_log is not None and kind is not None:
                            event_log.append((counters, level, u, array, el, kind))
                # one multicast group per (element, feeding parent): the first
                # member is the unique fetch, the rest ride the multicast
                for (el, key_u), members in sorted(groups.items()):
                    tally[3] += 1
                    tally[1] += len(members) - 1
                    if event_log is not None:
                        for idx, u in enumerate(sorted(members)):
                            event_log.append((counters, level, u, array, el,
                                              "UV" if idx == 0 else "SV"))
                resident[array] = {u: needed_all[u][array] for u in units}

        for array in w.arrays:
            tv, sv, tsv, uv, total = counts[array]
            report.set(level, array, VolumeCounts(tv, sv, tsv, uv, total))

    # activity is recorded at leaf-band granularity; intra-tile loops repeat
    # each step's count verbatim, so the mean is unchanged
    return OracleResult(report, active_series, leaf_steps)


def diff(a: VolumeReport, b: VolumeReport):
    """Structured difference; empty list iff the reports agree exactly."""
    da, db = dict(a.items()), dict(b.items())
    out = []
    for level, array in sorted(set(da) | set(db)):
        ca, cb = da.get((level, array)), db.get((level, array))
        if ca is None or cb is None:
            out.append((array, level, "missing", ca, cb))
            continue
        for fieldname in VolumeCounts._fields:
            va, vb = getattr(ca, fieldname), getattr(cb, fieldname)
            if va != vb:
                out.append((array, level, fieldname, va, vb))
    return out


def dump_events(events, stream):
    """One classified access per line: time, level, unit, array, element, class."""
    for t, level, unit, array, el, kind in events:
        stream.write(
            f"t={','.join(map(str, t))} level={level} unit={','.join(map(str, unit))} "
            f"array={array} elem={','.join(map(str, el))} class={kind}\n")
