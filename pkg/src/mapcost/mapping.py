"""Mapping description, legality checking and schedule-tree compilation.

A mapping lists, per memory level from DRAM down to the PE-local level, the
temporal loop order, the temporal tile T and the spatial tile S per dim.
T/S > 1 at a level means the level's tile is split spatially across the
child level's instances; the per-instance allotment is S, which the child
then tiles temporally.  Divisibility is required throughout (no ragged
tiles): T at a level divides the parent's per-instance S, and S divides T.

The compiled schedule tree is a chain of mark nodes (one per memory level),
each followed by a time band and, when the level splits spatially, a space
band; one final intra band enumerates the loops inside the leaf tile.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import yaml

from .arch import ArchSpec
from .errors import ConfigError, LegalityError, Violation
from .workload import Workload

RULE_DEPENDENCE = "dependence"
RULE_PARALLELISM = "parallelism"
RULE_CAPACITY = "capacity"
RULE_DIVISIBILITY = "divisibility"
RULE_STRUCTURE = "structure"


@dataclass(frozen=True)
class LevelMapping:
    level: str
    temporal_order: tuple[str, ...]
    temporal_tile: dict
    spatial_tile: dict
    space_x: str | None = None
    space_y: str | None = None
    simd: str | None = None


class Mapping:
    """Per-level tile/order table, outermost (DRAM) level first."""

    def __init__(self, per_level):
        self.per_level = tuple(per_level)
        if not self.per_level:
            raise ConfigError("mapping needs at least one level entry")
        self._by_level = {lm.level: lm for lm in self.per_level}
        if len(self._by_level) != len(self.per_level):
            raise ConfigError("duplicate level names in mapping")

    def level(self, name: str) -> LevelMapping:
        try:
            return self._by_level[name]
        except KeyError:
            raise ConfigError(f"mapping has no level '{name}'") from None

    def __iter__(self):
        return iter(self.per_level)


def parallelism(mapping: Mapping, level: str, dim: str) -> int:
    """T/S of one dim at one level; 1 means purely temporal."""
    lm = mapping.level(level)
    if dim not in lm.temporal_tile or dim not in lm.spatial_tile:
        raise ConfigError(f"dim '{dim}' not mapped at level '{level}'")
    t, s = lm.temporal_tile[dim], lm.spatial_tile[dim]
    if s <= 0 or t % s:
        raise ConfigError(f"level '{level}' dim '{dim}': S={s} must divide T={t}")
    return t // s


@dataclass(frozen=True)
class BandEntry:
    dim: str
    extent: int
    stride: int


@dataclass(frozen=True)
class SpaceSplit:
    """Spatial fan-out of one level into its child's units.

    Axis entries are (dim, parallelism, stride) triples; a SIMD entry is
    folded into the x coordinate of the resulting unit tuples.  Unit tuples
    follow the target grid's shape (coord_axes): 2-D grids always yield
    (x, y) coordinates, with an unsplit axis pinned at 0, so that the same
    coordinates work in the grid's connect relations; vector grids yield
    one-coordinate tuples along their long axis.
    """

    x: tuple[str, int, int] | None = None
    y: tuple[str, int, int] | None = None
    simd: tuple[str, int, int] | None = None
    coord_axes: tuple[str, ...] = ("x", "y")

    @property
    def px(self) -> int:
        n = self.x[1] if self.x else 1
        n *= self.simd[1] if self.simd else 1
        return n

    @property
    def py(self) -> int:
        return self.y[1] if self.y else 1

    @property
    def unit_arity(self) -> int:
        return len(self.coord_axes)

    @property
    def total(self) -> int:
        return self.px * self.py

    def units(self):
        """All unit coordinate tuples of this split, sorted."""
        ranges = {"x": range(self.px), "y": range(self.py)}
        return sorted(itertools.product(*[ranges[a] for a in self.coord_axes]))

    def contrib(self, unit):
        """Iteration-index contribution of one unit tuple, as (dim, offset)."""
        coords = dict(zip(self.coord_axes, unit))
        ux, uy = coords.get("x", 0), coords.get("y", 0)
        out = []
        if self.y is not None:
            out.append((self.y[0], self.y[2], uy))
        simd_ext = self.simd[1] if self.simd else 1
        if self.x is not None:
            out.append((self.x[0], self.x[2], ux // simd_ext))
        if self.simd is not None:
            out.append((self.simd[0], self.simd[2], ux % simd_ext))
        return [(dim, stride * idx) for dim, stride, idx in out]

    def entries(self):
        """Band entries in the fixed space-band order: y, x, simd."""
        out = []
        for part in (self.y, self.x, self.simd):
            if part is not None:
                out.append(BandEntry(part[0], part[1], part[2]))
        return tuple(out)


@dataclass(frozen=True)
class LevelNodes:
    """One mark node's subtree slice: its time band and optional space band."""

    level: str
    time_entries: tuple[BandEntry, ...]
    split: SpaceSplit | None


class ScheduleTree:
    """Compiled domain/mark/band chain with per-level stamp helpers."""

    def __init__(self, workload: Workload, per_level, intra_entries):
        self.workload = workload
        self.per_level = tuple(per_level)
        self.intra_entries = tuple(intra_entries)
        self._index = {ln.level: i for i, ln in enumerate(self.per_level)}

    @property
    def level_names(self):
        return tuple(ln.level for ln in self.per_level)

    def _level_index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise ConfigError(f"schedule tree has no mark for level '{name}'") from None

    def nodes(self, name: str) -> LevelNodes:
        return self.per_level[self._level_index(name)]

    def time_entries_upto(self, name: str) -> tuple[BandEntry, ...]:
        """Concatenated time-band entries from the root through this level."""
        i = self._level_index(name)
        out = []
        for ln in self.per_level[: i + 1]:
            out.extend(ln.time_entries)
        return tuple(out)

    def splits_above(self, name: str) -> tuple[SpaceSplit, ...]:
        """Space bands above this level's mark: they index this level's units."""
        i = self._level_index(name)
        return tuple(ln.split for ln in self.per_level[:i] if ln.split is not None)

    def units_of(self, name: str):
        """Unit tuples of a level (concatenated split coords), or [(1,)]."""
        splits = self.splits_above(name)
        if not splits:
            return [(1,)]
        parts = [sp.units() for sp in splits]
        return [tuple(itertools.chain.from_iterable(combo))
                for combo in itertools.product(*parts)]

    def unit_arity(self, name: str) -> int:
        splits = self.splits_above(name)
        return sum(sp.unit_arity for sp in splits) if splits else 1

    def unit_contrib(self, name: str, unit):
        """Iteration offsets of one unit tuple at a level, as dim -> offset."""
        splits = self.splits_above(name)
        out = {}
        if not splits:
            return out
        pos = 0
        for sp in splits:
            part = unit[pos: pos + sp.unit_arity]
            pos += sp.unit_arity
            for dim, off in sp.contrib(part):
                out[dim] = out.get(dim, 0) + off
        return out

    def parent_unit_arity(self, name: str) -> int:
        """Coordinate count of the unit prefix identifying the feeding parent."""
        i = self._level_index(name)
        if i == 0:
            raise ConfigError(f"level '{name}' is the root; it has no parent stamps")
        parent = self.per_level[i - 1].level
        splits = self.splits_above(parent)
        return sum(sp.unit_arity for sp in splits) if splits else 0

    def residual(self, name: str) -> dict:
        """Per-dim tile extent resident at the level at one of its time steps."""
        entries = {}
        for e in self.per_level[self._level_index(name)].time_entries:
            entries[e.dim] = e.stride
        return entries

    def leaf_time_entries(self) -> tuple[BandEntry, ...]:
        return self.time_entries_upto(self.per_level[-1].level) + self.intra_entries

    def active_units(self) -> int:
        n = 1
        for ln in self.per_level:
            if ln.split is not None:
                n *= ln.split.total
        return n

    def leaf_step_count(self) -> int:
        n = 1
        for e in self.leaf_time_entries():
            n *= e.extent
        return n

    def pretty(self) -> str:
        lines = [f"domain: {self.workload!r}"]
        pad = ""
        for ln in self.per_level:
            lines.append(f"{pad}mark {ln.level}")
            band = ", ".join(f"{e.dim}:{e.extent}x{e.stride}" for e in ln.time_entries)
            lines.append(f"{pad}  time  [{band}]")
            if ln.split is not None:
                band = ", ".join(f"{e.dim}:{e.extent}x{e.stride}" for e in ln.split.entries())
                lines.append(f"{pad}  space [{band}]")
            pad += "  "
        band = ", ".join(f"{e.dim}:{e.extent}" for e in self.intra_entries)
        lines.append(f"{pad}intra [{band}]")
        return "\n".join(lines)


def _tile_image_sizes(w: Workload, array: str, residual: dict) -> int:
    """Distinct elements of one array covered by a residual tile box.

    Valid because each array index draws on its own dim subset, so the image
    factorizes per array index.
    """
    total = 1
    acc = w.accesses_of(array)
    rank = acc[0].rank
    for k in range(rank):
        values = set()
        union = set()
        for a in acc:
            terms = a.index_terms[k]
            values = {a.index_consts[k]}
            for coef, dim in terms:
                values = {v + coef * q for v in values for q in range(residual[dim])}
            union |= values
        total *= len(union)
    return total


def check_legality(mapping: Mapping, arch: ArchSpec, w: Workload) -> list[Violation]:
    """All broken rules; empty list means the mapping is legal."""
    out = []
    arch_names = [lv.name for lv in arch.levels]
    map_names = [lm.level for lm in mapping.per_level]
    if map_names != arch_names:
        out.append(Violation(RULE_STRUCTURE, None, None,
                             f"mapping levels {map_names} must match arch levels {arch_names}"))
        return out

    dims = set(w.dim_names)
    alloc = dict(w.extent)
    reduction = set(w.reduction_dims)
    written = {a.array for a in w.accesses if a.kind == "write"}
    fanout = 1  # cumulative spatial fan-out above the current level

    for idx, lm in enumerate(mapping.per_level):
        lv = arch.level(lm.level)
        if tuple(sorted(lm.temporal_order)) != tuple(sorted(dims)):
            out.append(Violation(RULE_STRUCTURE, lm.level, None,
                                 f"temporal_order {list(lm.temporal_order)} must be a "
                                 f"permutation of {sorted(dims)}"))
            return out
        for tiles, label in ((lm.temporal_tile, "temporal_tile"),
                             (lm.spatial_tile, "spatial_tile")):
            missing = dims - set(tiles)
            if missing:
                out.append(Violation(RULE_STRUCTURE, lm.level, None,
                                     f"{label} missing dims {sorted(missing)}"))
                return out
            for d, v in tiles.items():
                if d not in dims or int(v) < 1:
                    out.append(Violation(RULE_STRUCTURE, lm.level, d,
                                         f"{label}[{d}] = {v} invalid"))
                    return out

        if idx == 0:
            for d in w.dim_names:
                if lm.temporal_tile[d] != w.extent[d]:
                    out.append(Violation(RULE_STRUCTURE, lm.level, d,
                                         f"outermost T[{d}] = {lm.temporal_tile[d]} must equal "
                                         f"the full extent {w.extent[d]}"))

        axis_of = {}
        for axis, dim in (("x", lm.space_x), ("y", lm.space_y), ("simd", lm.simd)):
            if dim is None:
                continue
            if dim not in dims:
                out.append(Violation(RULE_STRUCTURE, lm.level, dim,
                                     f"space_{axis} names unknown dim '{dim}'"))
                return out
            if dim in axis_of.values():
                out.append(Violation(RULE_STRUCTURE, lm.level, dim,
                                     f"dim '{dim}' mapped to more than one axis"))
                return out
            axis_of[axis] = dim

        spatial_dims = []
        for d in w.dim_names:
            t, s = lm.temporal_tile[d], lm.spatial_tile[d]
            if alloc[d] % t:
                out.append(Violation(RULE_DIVISIBILITY, lm.level, d,
                                     f"T={t} does not divide the incoming allotment {alloc[d]}"))
            if t % s:
                out.append(Violation(RULE_DIVISIBILITY, lm.level, d,
                                     f"S={s} does not divide T={t}"))
                continue
            if t // s > 1:
                spatial_dims.append(d)
                if d not in axis_of.values():
                    out.append(Violation(RULE_STRUCTURE, lm.level, d,
                                         f"parallelism {t // s} > 1 but dim has no "
                                         f"space_x/space_y/simd assignment"))
        if any(v.rule == RULE_DIVISIBILITY or v.rule == RULE_STRUCTURE for v in out):
            # tile algebra below would divide by ragged numbers; stop here
            return out

        child = arch.levels[idx + 1] if idx + 1 < len(arch.levels) else None
        if spatial_dims:
            if child is None:
                out.append(Violation(RULE_STRUCTURE, lm.level, None,
                                     "leaf level cannot split spatially: no level below"))
                return out
            px = py = 1
            for axis, d in axis_of.items():
                p = lm.temporal_tile[d] // lm.spatial_tile[d]
                if axis == "y":
                    py *= p
                else:
                    px *= p
            if px > child.grid[0]:
                out.append(Violation(RULE_PARALLELISM, lm.level, lm.space_x or lm.simd,
                                     f"x parallelism {px} > {child.grid[0]} instances of "
                                     f"'{child.name}' along x"))
            if py > child.grid[1]:
                out.append(Violation(RULE_PARALLELISM, lm.level, lm.space_y,
                                     f"y parallelism {py} > {child.grid[1]} instances of "
                                     f"'{child.name}' along y"))
            fanout *= px * py
            if fanout > child.instances:
                out.append(Violation(RULE_PARALLELISM, lm.level, None,
                                     f"cumulative fan-out {fanout} > {child.instances} "
                                     f"instances of '{child.name}'"))
            split_reduction = [d for d in spatial_dims if d in reduction]
            if split_reduction:
                has_path = child is not None and any(
                    c.to_level is None and (c.array is None or c.array in written)
                    for c in child.connects)
                if not has_path:
                    out.append(Violation(
                        RULE_DEPENDENCE, lm.level, split_reduction[0],
                        f"reduction dim(s) {split_reduction} split spatially but child "
                        f"'{child.name if child else '?'}' has no accumulation connect "
                        f"for a written array"))

        if not lv.virtual:
            residual = {d: lm.temporal_tile[d] for d in w.dim_names}
            datums = sum(_tile_image_sizes(w, arr, residual) for arr in w.arrays)
            footprint = (datums * w.element_bits + 7) // 8
            if lv.capacity_bytes and footprint > lv.capacity_bytes:
                out.append(Violation(RULE_CAPACITY, lm.level, None,
                                     f"tile footprint {footprint} B > capacity "
                                     f"{lv.capacity_bytes} B"))

        alloc = {d: lm.spatial_tile[d] for d in w.dim_names}

    return out


def build_schedule_tree(mapping: Mapping, w: Workload, arch: ArchSpec) -> ScheduleTree:
    """Compile a legal mapping; raises LegalityError listing broken rules."""
    violations = check_legality(mapping, arch, w)
    if violations:
        raise LegalityError(violations)

    per_level = []
    alloc = dict(w.extent)
    for idx, lm in enumerate(mapping.per_level):
        time_entries = tuple(
            BandEntry(d, alloc[d] // lm.temporal_tile[d], lm.temporal_tile[d])
            for d in lm.temporal_order)
        split = None
        parts = {}
        for axis, dim in (("x", lm.space_x), ("y", lm.space_y), ("simd", lm.simd)):
            if dim is None:
                continue
            par = lm.temporal_tile[dim] // lm.spatial_tile[dim]
            if par > 1:
                parts[axis] = (dim, par, lm.spatial_tile[dim])
        if parts:
            nx, ny = arch.levels[idx + 1].grid
            if nx > 1 and ny > 1:
                axes = ("x", "y")
            elif ny == 1:
                axes = ("x",)
            else:
                axes = ("y",)
            split = SpaceSplit(x=parts.get("x"), y=parts.get("y"),
                               simd=parts.get("simd"), coord_axes=axes)
        per_level.append(LevelNodes(lm.level, time_entries, split))
        alloc = {d: lm.spatial_tile[d] for d in w.dim_names}

    leaf = mapping.per_level[-1]
    intra = tuple(BandEntry(d, leaf.spatial_tile[d], 1) for d in leaf.temporal_order)
    return ScheduleTree(w, per_level, intra)


_MAP_LEVEL_KEYS = {"level", "temporal_order", "temporal_tile", "spatial_tile",
                   "space_x", "space_y", "simd"}


def mapping_from_dict(doc: dict) -> Mapping:
    if not isinstance(doc, dict):
        raise ConfigError("mapping config must be a mapping")
    unknown = set(doc) - {"levels"}
    if unknown:
        raise ConfigError(f"mapping config: unknown fields {sorted(unknown)}")
    levels_doc = doc.get("levels")
    if not isinstance(levels_doc, list) or not levels_doc:
        raise ConfigError("mapping config: non-empty 'levels' list required")
    out = []
    for d in levels_doc:
        if not isinstance(d, dict):
            raise ConfigError("each mapping level must be a mapping")
        extra = set(d) - _MAP_LEVEL_KEYS
        if extra:
            raise ConfigError(f"mapping level '{d.get('level', '?')}': unknown fields "
                              f"{sorted(extra)}")
        if "level" not in d or "temporal_order" not in d or "temporal_tile" not in d:
            raise ConfigError("mapping level needs 'level', 'temporal_order', 'temporal_tile'")
        t_tile = {str(k): int(v) for k, v in (d["temporal_tile"] or {}).items()}
        s_tile = {str(k): int(v) for k, v in (d.get("spatial_tile") or t_tile).items()}
        for k, v in t_tile.items():
            s_tile.setdefault(k, v)
        out.append(LevelMapping(
            level=str(d["level"]),
            temporal_order=tuple(str(x) for x in d["temporal_order"]),
            temporal_tile=t_tile,
            spatial_tile=s_tile,
            space_x=d.get("space_x"),
            space_y=d.get("space_y"),
            simd=d.get("simd"),
        ))
    return Mapping(out)


def parse_mapping(text: str) -> Mapping:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"mapping config: {exc}") from None
    return mapping_from_dict(doc)
