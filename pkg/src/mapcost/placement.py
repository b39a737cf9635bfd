"""Data placement relations derived from the schedule tree.

The space-time map of a level sends each loop instance to a wrapped
[[space-stamp] -> [time-stamp]] pair: the time-stamp concatenates every time
band from the root through the level's own band, the space-stamp concatenates
the space-band coordinates above the level's mark (constant (1,) when there
are none).  Placement relations then follow by composing with the inverted
array access relation, and inter-level relations pair every child placement
with the feeding parent placement (tuple prefixes, unless a cross-level
connect restricts the feed).

Everything here materializes explicit relations and is meant for desk-scale
inputs; the analysis module has an equivalent closed-form path for large
runs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import ConfigError, StructuralError
from .intset import IntRelation, Shape, _check_budget
from .mapping import ScheduleTree
from .workload import Workload


@dataclass(frozen=True)
class SpaceTimeMap:
    level: str
    rel: IntRelation  # instance -> [[s] -> [t]]
    s_arity: int
    t_arity: int


@dataclass(frozen=True)
class PlacementSet:
    level: str
    array: str
    rel: IntRelation  # element -> [[s] -> [t]]

    def render(self) -> str:
        return self.rel.render()


@dataclass(frozen=True)
class InterLevelPlacement:
    parent_level: str
    child_level: str
    array: str
    rel: IntRelation  # element -> [[[sp] -> [tp]] -> [[sc] -> [tc]]]

    def render(self) -> str:
        return self.rel.render()


def _stamp_iter(tree: ScheduleTree, level: str):
    """Yield (s, t, base) for every stamp of a level.

    base maps dim -> iteration offset contributed by the fixed counters;
    the residual T-tile of the level spans the rest.
    """
    time_entries = tree.time_entries_upto(level)
    units = tree.units_of(level)
    has_units = bool(tree.splits_above(level))
    unit_bases = []
    for u in units:
        unit_bases.append((u, tree.unit_contrib(level, u) if has_units else {}))
    for counters in itertools.product(*[range(e.extent) for e in time_entries]):
        t = tuple(counters)
        base_t = {}
        for e, c in zip(time_entries, counters):
            base_t[e.dim] = base_t.get(e.dim, 0) + e.stride * c
        for u, ubase in unit_bases:
            base = dict(base_t)
            for d, off in ubase.items():
                base[d] = base.get(d, 0) + off
            yield u, t, base


def space_time_map(tree: ScheduleTree, level: str, budget=None) -> SpaceTimeMap:
    """Instance -> [[s] -> [t]] by explicit enumeration (budget bound)."""
    w = tree.workload
    residual = tree.residual(level)
    time_entries = tree.time_entries_upto(level)
    s_arity = tree.unit_arity(level)
    t_arity = len(time_entries)
    _check_budget(w.domain_size, budget, f"space-time map at '{level}'")
    dim_names = w.dim_names
    pairs = []
    for u, t, base in _stamp_iter(tree, level):
        stamp = u + t
        for offs in itertools.product(*[range(residual[d]) for d in dim_names]):
            inst = tuple(base.get(d, 0) + o for d, o in zip(dim_names, offs))
            pairs.append((inst, stamp))
    shape = Shape.pair(Shape.flat(s_arity), Shape.flat(t_arity))
    rel = IntRelation(pairs, in_shape=Shape.flat(len(dim_names)), out_shape=shape,
                      budget=budget)
    return SpaceTimeMap(level, rel, s_arity, t_arity)


def theta(tree: ScheduleTree, w: Workload, array: str, level: str,
          budget=None) -> PlacementSet:
    """Placement of one array at one level: compose(ST, access^-1)."""
    st = space_time_map(tree, level, budget)
    access = w.access_relation(array, budget=budget)
    rel = st.rel.compose(access.inverse(), budget=budget)
    return PlacementSet(level, array, rel)


def inter_level(tree: ScheduleTree, w: Workload, array: str,
                parent_level: str, child_level: str, arch=None,
                budget=None) -> InterLevelPlacement:
    """Pair each child placement with the parent placement feeding it."""
    names = tree.level_names
    ci = names.index(child_level) if child_level in names else -1
    if ci <= 0 or names[ci - 1] != parent_level:
        raise ConfigError(
            f"'{parent_level}' is not the tree parent of '{child_level}'")

    child = theta(tree, w, array, child_level, budget)
    parent = theta(tree, w, array, parent_level, budget)
    parent_stamps = {}
    for p, stamp in parent.rel.pairs:
        parent_stamps.setdefault(p, set()).add(stamp)

    sc_arity = tree.unit_arity(child_level)
    tc_arity = len(tree.time_entries_upto(child_level))
    sp_arity = tree.unit_arity(parent_level)
    tp_arity = len(tree.time_entries_upto(parent_level))
    sp_coords = tree.parent_unit_arity(child_level)  # 0 when parent is unsplit

    # A cross-level connect names each child unit's feeding parent unit
    # (child coords in, parent coords out); absent that, the feeder is the
    # unit-coordinate prefix.
    feed = None
    if arch is not None:
        xmap = arch.cross_level_connect(parent_level, child_level, array)
        if xmap is not None:
            if xmap.in_arity != sc_arity:
                raise ConfigError(
                    f"cross-level connect '{xmap.src}': input arity {xmap.in_arity} "
                    f"!= child unit arity {sc_arity}")
            child_units = {stamp[:sc_arity] for _, stamp in child.rel.pairs}
            feed = set()
            for a, b in xmap.tabulate(sorted(child_units)).pairs:
                if len(b) != sp_arity:
                    raise ConfigError(
                        f"cross-level connect '{xmap.src}': output arity {len(b)} "
                        f"!= parent unit arity {sp_arity}")
                feed.add((b, a))

    pairs = []
    for p, stamp in child.rel.pairs:
        sc, tc = stamp[:sc_arity], stamp[sc_arity:]
        tp = tc[:tp_arity]
        sp = sc[:sp_coords] if sp_coords else (1,)
        if feed is not None:
            fed = [su for (su, cu) in feed if cu == sc]
            if not fed:
                raise ConfigError(
                    f"cross-level connect leaves child unit {sc} of '{child_level}' "
                    f"without a feeding parent for array '{array}'")
            sps = fed
        else:
            sps = [sp]
        for sp_u in sps:
            if sp_u + tp not in parent_stamps.get(p, ()):
                raise StructuralError(
                    f"parent placement missing for element {p} at {(sp_u, tp)}")
            pairs.append((p, sp_u + tp + sc + tc))

    ps = Shape.pair(Shape.flat(sp_arity), Shape.flat(tp_arity))
    cs = Shape.pair(Shape.flat(sc_arity), Shape.flat(tc_arity))
    rel = IntRelation(pairs, in_shape=child.rel.in_shape, out_shape=Shape.pair(ps, cs),
                      budget=budget)
    return InterLevelPlacement(parent_level, child_level, array, rel)
