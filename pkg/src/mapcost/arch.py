"""Memory-centric accelerator description.

An ArchSpec is a root-to-leaf chain of memory levels (root is DRAM, the leaf
level hosts the MAC units).  Each level carries an instance grid, capacity,
access energies and interconnect relations in brace notation; a virtual level
(e.g. a NoC) has no storage or energy of its own and only carries spatial
structure and connects.  Hardware cost coefficients live in a params block,
never in code.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import yaml

from .errors import ConfigError
from .intset import AffineMap, IntRelation, parse_map


@dataclass(frozen=True)
class ConnectSpec:
    """One interconnect relation over unit coordinates.

    Same-level entries describe unit-to-unit forwarding at this level; an
    entry with to_level names a parent-to-child feed restriction instead.
    An entry may be scoped to one array ("array: C"), otherwise it applies
    to every operand.
    """

    rel: AffineMap
    array: str | None = None
    to_level: str | None = None


@dataclass(frozen=True)
class MemoryLevel:
    name: str
    parent: str | None
    grid: tuple[int, int]
    virtual: bool = False
    capacity_bytes: int = 0
    read_energy: float = 0.0
    write_energy: float = 0.0
    dim_axis: str = "X"
    connects: tuple[ConnectSpec, ...] = ()
    per_operand: tuple[tuple[str, str], ...] = ()  # (array, buffer name) pairs

    def __post_init__(self):
        nx, ny = self.grid
        if nx < 1 or ny < 1:
            raise ConfigError(f"level '{self.name}': grid counts must be >= 1, got {self.grid}")
        if self.dim_axis not in ("X", "Y", "XY"):
            raise ConfigError(f"level '{self.name}': dim_axis must be X, Y or XY")

    @property
    def instances(self) -> int:
        return self.grid[0] * self.grid[1]


@dataclass(frozen=True)
class HardwareParams:
    """Cost coefficients: MAC energies (pJ), interconnect energies per datum,
    MAC latency, bus width in datums/cycle, clock frequencies and the DMA
    startup/per-byte model constants.

    The four energy coefficients have no defaults: leaving one unset is a
    config error at energy-estimation time, not a silent zero.
    """

    e_act: float | None = None
    e_idle: float | None = None
    e_multi: float | None = None
    e_inter: float | None = None
    lat_avg: float = 1.0
    pe_size: int | None = None
    bus_width_B: float = 1.0
    f_accel: float = 1.0
    f_dma: float = 1.0
    dma_init: float = 0.0
    dma_bytes_per_cycle_inv: float = 0.25

    def __post_init__(self):
        for name in ("e_act", "e_idle", "e_multi", "e_inter"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ConfigError(f"params.{name} must be non-negative")
        for name in ("lat_avg", "bus_width_B", "f_accel", "f_dma", "dma_init",
                     "dma_bytes_per_cycle_inv"):
            v = getattr(self, name)
            if v is None or v < 0:
                raise ConfigError(f"params.{name} must be a non-negative number")


class ArchSpec:
    """Validated level chain plus hardware params."""

    def __init__(self, levels, params: HardwareParams):
        levels = tuple(levels)
        if not levels:
            raise ConfigError("arch needs at least one memory level")
        if levels[0].parent is not None:
            raise ConfigError(f"first level '{levels[0].name}' must be the root (parent: null)")
        names = [lv.name for lv in levels]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate level names in {names}")
        for above, below in zip(levels, levels[1:]):
            if below.parent != above.name:
                raise ConfigError(
                    f"level '{below.name}' parent is '{below.parent}', expected "
                    f"'{above.name}' (levels are ordered root to leaf)")
        for lv in levels:
            for c in lv.connects:
                if c.to_level is not None and c.to_level not in names:
                    raise ConfigError(
                        f"level '{lv.name}': connect targets unknown level '{c.to_level}'")
        self.levels = levels
        self._by_name = {lv.name: lv for lv in levels}
        leaf = levels[-1]
        if params.pe_size is None:
            params = replace(params, pe_size=leaf.instances)
        elif params.pe_size != leaf.instances:
            raise ConfigError(
                f"params.pe_size {params.pe_size} != leaf level '{leaf.name}' "
                f"grid product {leaf.instances}")
        self.params = params

    def __eq__(self, other):
        return (isinstance(other, ArchSpec)
                and self.levels == other.levels and self.params == other.params)

    def __repr__(self):
        return "ArchSpec(" + " -> ".join(lv.name for lv in self.levels) + ")"

    @property
    def root(self) -> MemoryLevel:
        return self.levels[0]

    @property
    def leaf(self) -> MemoryLevel:
        return self.levels[-1]

    def level(self, name: str) -> MemoryLevel:
        try:
            return self._by_name[name]
        except KeyError:
            raise ConfigError(f"unknown level '{name}' (have {[l.name for l in self.levels]})") \
                from None

    def index(self, name: str) -> int:
        self.level(name)
        return next(i for i, lv in enumerate(self.levels) if lv.name == name)

    def parent_of(self, name: str) -> MemoryLevel | None:
        lv = self.level(name)
        return self._by_name[lv.parent] if lv.parent else None

    def child_of(self, name: str) -> MemoryLevel | None:
        i = self.index(name)
        return self.levels[i + 1] if i + 1 < len(self.levels) else None

    def physical_levels(self) -> tuple[MemoryLevel, ...]:
        return tuple(lv for lv in self.levels if not lv.virtual)

    def _grid_points(self, level: MemoryLevel, arity: int):
        nx, ny = level.grid
        if arity == 2:
            return [(x, y) for x in range(nx) for y in range(ny)], (lambda t: 0 <= t[0] < nx and 0 <= t[1] < ny)
        if arity == 1:
            if ny == 1:
                return [(x,) for x in range(nx)], (lambda t: 0 <= t[0] < nx)
            if nx == 1:
                return [(y,) for y in range(ny)], (lambda t: 0 <= t[0] < ny)
            raise ConfigError(
                f"level '{level.name}': 1-D connect on a {nx}x{ny} grid is ambiguous")
        raise ConfigError(f"level '{level.name}': connect arity {arity} unsupported")

    def connect_relation(self, name: str, array: str | None = None,
                         with_report: bool = False):
        """Union of the level's same-level connects, restricted to the grid.

        Pairs whose target falls outside the grid are dropped; with_report
        also returns (src, kept, dropped) per connect entry.
        """
        lv = self.level(name)
        rel = None
        report = []
        for c in lv.connects:
            if c.to_level is not None:
                continue
            if array is not None and c.array is not None and c.array != array:
                continue
            points, inside = self._grid_points(lv, c.rel.in_arity)
            tab = c.rel.tabulate(points, keep=inside)
            report.append((c.rel.src, len(tab), len(points) - len(tab.domain())))
            rel = tab if rel is None else rel.union(tab)
        if rel is None:
            arity = 2 if lv.grid[0] > 1 and lv.grid[1] > 1 else 1
            rel = IntRelation.empty(arity, arity)
        return (rel, report) if with_report else rel

    def cross_level_connect(self, parent: str, child: str,
                            array: str | None = None) -> AffineMap | None:
        """Feed restriction from parent units to child units, if configured."""
        lv = self.level(parent)
        self.level(child)
        for c in lv.connects:
            if c.to_level == child and (array is None or c.array is None or c.array == array):
                return c.rel
        return None


_LEVEL_KEYS = {"name", "parent", "grid", "virtual", "capacity_bytes",
               "read_energy", "write_energy", "dim_axis", "connect", "per_operand"}
_CONNECT_KEYS = {"rel", "array", "to_level"}
_PARAM_KEYS = {"e_act", "e_idle", "e_multi", "e_inter", "lat_avg", "pe_size",
               "bus_width_B", "f_accel", "f_dma", "dma_init", "dma_bytes_per_cycle_inv"}


def _parse_level(doc: dict) -> MemoryLevel:
    if not isinstance(doc, dict):
        raise ConfigError("each level must be a mapping")
    unknown = set(doc) - _LEVEL_KEYS
    if unknown:
        raise ConfigError(f"level '{doc.get('name', '?')}': unknown fields {sorted(unknown)}")
    if "name" not in doc or "grid" not in doc:
        raise ConfigError("each level needs 'name' and 'grid'")
    grid = doc["grid"]
    if not (isinstance(grid, (list, tuple)) and len(grid) == 2):
        raise ConfigError(f"level '{doc['name']}': grid must be [nx, ny]")
    connects = []
    for c in doc.get("connect", []) or []:
        if not isinstance(c, dict):
            raise ConfigError(f"level '{doc['name']}': connect entries must be mappings")
        extra = set(c) - _CONNECT_KEYS
        if extra:
            raise ConfigError(f"level '{doc['name']}': connect unknown fields {sorted(extra)}")
        connects.append(ConnectSpec(rel=parse_map(c["rel"]), array=c.get("array"),
                                    to_level=c.get("to_level")))
    per_op = doc.get("per_operand", {}) or {}
    if not isinstance(per_op, dict):
        raise ConfigError(f"level '{doc['name']}': per_operand must be a mapping")
    return MemoryLevel(
        name=str(doc["name"]),
        parent=doc.get("parent"),
        grid=(int(grid[0]), int(grid[1])),
        virtual=bool(doc.get("virtual", False)),
        capacity_bytes=int(doc.get("capacity_bytes", 0)),
        read_energy=float(doc.get("read_energy", 0.0)),
        write_energy=float(doc.get("write_energy", 0.0)),
        dim_axis=str(doc.get("dim_axis", "X")),
        connects=tuple(connects),
        per_operand=tuple(sorted((str(k), str(v)) for k, v in per_op.items())),
    )


def arch_from_dict(doc: dict) -> ArchSpec:
    if not isinstance(doc, dict):
        raise ConfigError("arch config must be a mapping")
    unknown = set(doc) - {"levels", "params"}
    if unknown:
        raise ConfigError(f"arch config: unknown fields {sorted(unknown)}")
    levels_doc = doc.get("levels")
    if not isinstance(levels_doc, list) or not levels_doc:
        raise ConfigError("arch config: non-empty 'levels' list required")
    params_doc = dict(doc.get("params", {}) or {})
    extra = set(params_doc) - _PARAM_KEYS
    if extra:
        raise ConfigError(f"arch params: unknown fields {sorted(extra)}")
    for k, v in params_doc.items():
        # YAML 1.1 floats need a signed exponent; accept "1.0e9" spellings too
        if isinstance(v, str):
            try:
                params_doc[k] = int(v) if k == "pe_size" else float(v)
            except ValueError:
                raise ConfigError(f"arch params: {k} = {v!r} is not a number") from None
    params = HardwareParams(**params_doc)
    return ArchSpec([_parse_level(d) for d in levels_doc], params)


def parse_arch(text: str) -> ArchSpec:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"arch config: {exc}") from None
    return arch_from_dict(doc)


def render_arch(spec: ArchSpec) -> str:
    """YAML rendering; parse_arch(render_arch(spec)) == spec."""
    params = {}
    for k in sorted(_PARAM_KEYS):
        params[k] = getattr(spec.params, k)
    levels = []
    for lv in spec.levels:
        d = {
            "name": lv.name,
            "parent": lv.parent,
            "grid": list(lv.grid),
            "virtual": lv.virtual,
            "capacity_bytes": lv.capacity_bytes,
            "read_energy": lv.read_energy,
            "write_energy": lv.write_energy,
            "dim_axis": lv.dim_axis,
        }
        if lv.connects:
            d["connect"] = [
                {k: v for k, v in
                 (("rel", c.rel.src), ("array", c.array), ("to_level", c.to_level))
                 if v is not None}
                for c in lv.connects]
        if lv.per_operand:
            d["per_operand"] = {k: v for k, v in lv.per_operand}
        levels.append(d)
    return yaml.safe_dump({"params": params, "levels": levels}, sort_keys=False)


def eyeriss_like() -> ArchSpec:
    """A 14x12 PE array with a global buffer and a virtual NoC level.

    Outputs propagate downward, weights leftward, inputs along the diagonal.
    Energy coefficients are illustrative placeholders, not measured values.
    """
    levels = (
        MemoryLevel("dram", None, (1, 1), capacity_bytes=8 << 30,
                    read_energy=200.0, write_energy=200.0),
        MemoryLevel("glb", "dram", (1, 1), capacity_bytes=128 * 1024,
                    read_energy=6.0, write_energy=6.0),
        MemoryLevel("noc", "glb", (1, 1), virtual=True),
        MemoryLevel("rf", "noc", (14, 12), capacity_bytes=512,
                    read_energy=1.0, write_energy=1.0,
                    connects=(
                        ConnectSpec(parse_map("{[x, y] -> [x, y - 1]}"), array="O"),
                        ConnectSpec(parse_map("{[x, y] -> [x - 1, y]}"), array="W"),
                        ConnectSpec(parse_map("{[x, y] -> [x + 1, y - 1]}"), array="I"),
                    ),
                    per_operand=(("I", "ifmap_spad"), ("O", "psum_spad"),
                                 ("W", "weight_spad"))),
    )
    params = HardwareParams(e_act=1.0, e_idle=0.1, e_multi=0.3, e_inter=0.3,
                            lat_avg=1.0, pe_size=168, bus_width_B=16.0,
                            f_accel=1e9, f_dma=1e9, dma_init=100.0)
    return ArchSpec(levels, params)
