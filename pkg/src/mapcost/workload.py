"""Affine loop-nest workloads: iteration domain, access functions, schedule.

Loop bounds are half-open, [0, extent), per dimension.  Two generators are
built in: dense matrix multiply and 2D convolution (7-deep nest with stride).
Array accesses are affine maps from the iteration vector to array indices,
with each array index drawing on its own subset of loop dimensions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import yaml

from .errors import ConfigError, StructuralError
from .intset import IntRelation, IntSet, _check_budget

READ = "read"
WRITE = "write"


@dataclass(frozen=True)
class DimSpec:
    name: str
    extent: int

    def __post_init__(self):
        if self.extent < 1:
            raise ConfigError(f"dim '{self.name}': extent must be >= 1, got {self.extent}")


@dataclass(frozen=True)
class AccessFunction:
    """One array reference: index expressions are sums of coef*dim + const.

    index_terms[k] is a tuple of (coef, dim_name) pairs for array index k;
    index_consts[k] the constant offset.  Example: conv input row index
    stride*oy + r becomes ((stride, "oy"), (1, "r")).
    """

    array: str
    kind: str  # READ or WRITE
    index_terms: tuple[tuple[tuple[int, str], ...], ...]
    index_consts: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in (READ, WRITE):
            raise ConfigError(f"access kind must be read/write, got '{self.kind}'")
        if len(self.index_terms) != len(self.index_consts):
            raise StructuralError("index_terms and index_consts length mismatch")

    @property
    def rank(self) -> int:
        return len(self.index_terms)

    def dims_used(self):
        return {d for terms in self.index_terms for _, d in terms}

    def eval(self, point: dict) -> tuple[int, ...]:
        return tuple(
            sum(c * point[d] for c, d in terms) + const
            for terms, const in zip(self.index_terms, self.index_consts))


class Workload:
    """Immutable loop nest: dims + accesses + identity base schedule."""

    def __init__(self, name, dims, accesses, element_bits=16):
        self.name = name
        self.dims = tuple(dims)
        self.accesses = tuple(accesses)
        self.element_bits = int(element_bits)
        if self.element_bits < 1:
            raise ConfigError("element_bits must be positive")
        names = [d.name for d in self.dims]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate dim names in {names}")
        if not any(a.kind == WRITE for a in self.accesses):
            raise ConfigError("workload needs at least one write access")
        known = set(names)
        for a in self.accesses:
            missing = a.dims_used() - known
            if missing:
                raise ConfigError(f"access to '{a.array}' uses unknown dims {sorted(missing)}")
        self.dim_names = tuple(names)
        self.extent = {d.name: d.extent for d in self.dims}
        # array ids by first appearance, so one relation can carry all arrays
        order = []
        for a in self.accesses:
            if a.array not in order:
                order.append(a.array)
        self.arrays = tuple(order)
        self._array_id = {name: i for i, name in enumerate(order)}

    def __repr__(self):
        dims = ", ".join(f"{d.name}={d.extent}" for d in self.dims)
        return f"Workload({self.name}: {dims})"

    def array_id(self, array: str) -> int:
        try:
            return self._array_id[array]
        except KeyError:
            raise ConfigError(f"unknown array '{array}' (have {list(self.arrays)})") from None

    def accesses_of(self, array: str, kinds=(READ, WRITE)):
        self.array_id(array)
        return tuple(a for a in self.accesses if a.array == array and a.kind in kinds)

    @property
    def domain_size(self) -> int:
        n = 1
        for d in self.dims:
            n *= d.extent
        return n

    @property
    def reduction_dims(self) -> tuple[str, ...]:
        """Dims that do not index any written array (e.g. k in matmul)."""
        written = set()
        for a in self.accesses:
            if a.kind == WRITE:
                written |= a.dims_used()
        return tuple(d.name for d in self.dims if d.name not in written)

    def array_extents(self, array: str) -> tuple[int, ...]:
        """Implied array bounds: max index + 1 per rank (coefs are >= 0 here)."""
        acc = self.accesses_of(array)
        hi_point = {d.name: d.extent - 1 for d in self.dims}
        extents = None
        for a in acc:
            idx = a.eval(hi_point)
            extents = idx if extents is None else tuple(max(x, y) for x, y in zip(extents, idx))
        return tuple(v + 1 for v in extents)

    def iter_domain(self, budget=None):
        _check_budget(self.domain_size, budget, f"domain of {self.name}")
        names = self.dim_names
        for point in itertools.product(*[range(d.extent) for d in self.dims]):
            yield dict(zip(names, point))

    def domain_set(self, budget=None) -> IntSet:
        _check_budget(self.domain_size, budget, f"domain of {self.name}")
        return IntSet(itertools.product(*[range(d.extent) for d in self.dims]),
                      arity=len(self.dims), budget=budget)

    def access_relation(self, array: str, kinds=(READ, WRITE), budget=None) -> IntRelation:
        """Instance -> element pairs for one array, enumerated over the domain."""
        acc = self.accesses_of(array, kinds)
        if not acc:
            raise ConfigError(f"array '{array}' has no {'/'.join(kinds)} access")
        pairs = []
        for point in self.iter_domain(budget):
            inst = tuple(point[n] for n in self.dim_names)
            for a in acc:
                pairs.append((inst, a.eval(point)))
        return IntRelation(pairs, in_arity=len(self.dims), budget=budget)

    def _tagged_relation(self, kind, budget=None) -> IntRelation:
        ranks = {a.rank for a in self.accesses}
        if len(ranks) != 1:
            raise ConfigError("combined relations need equal array ranks")
        pairs = []
        for point in self.iter_domain(budget):
            inst = tuple(point[n] for n in self.dim_names)
            for a in self.accesses:
                if a.kind == kind:
                    pairs.append((inst, (self._array_id[a.array],) + a.eval(point)))
        return IntRelation(pairs, in_arity=len(self.dims), budget=budget)

    def read_relation(self, budget=None) -> IntRelation:
        """All reads as instance -> (array_id, indices...) pairs."""
        return self._tagged_relation(READ, budget)

    def write_relation(self, budget=None) -> IntRelation:
        return self._tagged_relation(WRITE, budget)


def _plain(dim):
    return ((1, dim),)


def gemm(I: int, J: int, K: int, element_bits: int = 16, name: str | None = None) -> Workload:
    """C[i,j] += A[i,k] * B[k,j] over the box I x J x K."""
    dims = (DimSpec("i", I), DimSpec("j", J), DimSpec("k", K))
    acc = (
        AccessFunction("C", READ, (_plain("i"), _plain("j")), (0, 0)),
        AccessFunction("A", READ, (_plain("i"), _plain("k")), (0, 0)),
        AccessFunction("B", READ, (_plain("k"), _plain("j")), (0, 0)),
        AccessFunction("C", WRITE, (_plain("i"), _plain("j")), (0, 0)),
    )
    return Workload(name or f"gemm-{I}x{J}x{K}", dims, acc, element_bits)


def conv2d(N: int, K: int, C: int, Oy: int, Ox: int, R: int, S: int,
           stride: int = 1, element_bits: int = 16, name: str | None = None) -> Workload:
    """O[n,k,oy,ox] += I[n,c,stride*oy+r,stride*ox+s] * W[k,c,r,s].

    Input extents are implied (pre-padded input assumed; there is no pad
    attribute).
    """
    if stride < 1:
        raise ConfigError(f"stride must be >= 1, got {stride}")
    dims = (DimSpec("n", N), DimSpec("k", K), DimSpec("c", C),
            DimSpec("oy", Oy), DimSpec("ox", Ox), DimSpec("r", R), DimSpec("s", S))
    out_idx = (_plain("n"), _plain("k"), _plain("oy"), _plain("ox"))
    acc = (
        AccessFunction("O", READ, out_idx, (0, 0, 0, 0)),
        AccessFunction("I", READ,
                       (_plain("n"), _plain("c"),
                        ((stride, "oy"), (1, "r")), ((stride, "ox"), (1, "s"))),
                       (0, 0, 0, 0)),
        AccessFunction("W", READ, (_plain("k"), _plain("c"), _plain("r"), _plain("s")),
                       (0, 0, 0, 0)),
        AccessFunction("O", WRITE, out_idx, (0, 0, 0, 0)),
    )
    return Workload(name or f"conv-{N}x{K}x{C}x{Oy}x{Ox}x{R}x{S}s{stride}", dims, acc,
                    element_bits)


# Table layer shapes below are externally sourced from the networks' original
# publications (the input extents are the pre-padded ones).
BUILTIN_WORKLOADS = {
    "gemm-256": lambda: gemm(256, 256, 256, name="gemm-256"),
    "gemm-8": lambda: gemm(8, 8, 8, name="gemm-8"),
    "alexnet-conv2": lambda: conv2d(1, 256, 96, 27, 27, 5, 5, 1, name="alexnet-conv2"),
    "mobilenetv2-2": lambda: conv2d(1, 96, 16, 112, 112, 1, 1, 1, name="mobilenetv2-2"),
    "resnet50-1": lambda: conv2d(1, 64, 3, 112, 112, 7, 7, 2, name="resnet50-1"),
}

_GEMM_KEYS = {"i", "j", "k"}
_CONV_KEYS = {"n", "k", "c", "oy", "ox", "r", "s", "stride"}


def workload_from_dict(doc: dict, name: str | None = None) -> Workload:
    if not isinstance(doc, dict):
        raise ConfigError("workload config must be a mapping")
    unknown = set(doc) - {"op", "dims", "element_bits", "name"}
    if unknown:
        raise ConfigError(f"workload config: unknown fields {sorted(unknown)}")
    op = doc.get("op")
    dims = doc.get("dims")
    bits = doc.get("element_bits", 16)
    name = doc.get("name", name)
    if not isinstance(dims, dict):
        raise ConfigError("workload config: 'dims' mapping required")
    if op == "gemm":
        extra = set(dims) - _GEMM_KEYS
        if extra:
            raise ConfigError(f"gemm dims: unknown keys {sorted(extra)}")
        try:
            return gemm(dims["i"], dims["j"], dims["k"], bits, name)
        except KeyError as exc:
            raise ConfigError(f"gemm dims: missing {exc}") from None
    if op == "conv2d":
        extra = set(dims) - _CONV_KEYS
        if extra:
            raise ConfigError(f"conv2d dims: unknown keys {sorted(extra)}")
        try:
            return conv2d(dims["n"], dims["k"], dims["c"], dims["oy"], dims["ox"],
                          dims["r"], dims["s"], dims.get("stride", 1), bits, name)
        except KeyError as exc:
            raise ConfigError(f"conv2d dims: missing {exc}") from None
    raise ConfigError(f"workload op must be gemm or conv2d, got {op!r}")


def load_workload(source: str) -> Workload:
    """Resolve a builtin name or parse a YAML config document."""
    if source in BUILTIN_WORKLOADS:
        return BUILTIN_WORKLOADS[source]()
    try:
        doc = yaml.safe_load(source)
    except yaml.YAMLError as exc:
        raise ConfigError(f"workload config: {exc}") from None
    return workload_from_dict(doc)
