"""Bounded integer set and relation engine.

Sets and relations are finite, explicitly enumerated collections of integer
tuples, stored sorted (lexicographic) so every iteration order and rendering
is deterministic.  A hard element budget (default 5,000,000 tuples, override
with the MAPCOST_BUDGET environment variable or per call) turns runaway
enumerations into a BudgetError instead of silently degrading.

Composition convention, fixed here once for the whole package:

    compose(f, g) = { a -> c : a -> b in g  and  b -> c in f }

i.e. the right operand g is applied first.  All schedule/placement algebra in
the other modules is written against this convention.

Values are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import ast
import itertools
import os
import re

from .errors import BudgetError, ParseError, StructuralError

DEFAULT_BUDGET = 5_000_000

_ENV_BUDGET = "MAPCOST_BUDGET"


def element_budget(override: int | None = None) -> int:
    """Resolve the enumeration budget: explicit arg > env var > default."""
    if override is not None:
        return int(override)
    env = os.environ.get(_ENV_BUDGET)
    if env:
        return int(env)
    return DEFAULT_BUDGET


def _check_budget(n: int, budget: int | None, what: str) -> None:
    limit = element_budget(budget)
    if n > limit:
        raise BudgetError(f"{what} needs {n} tuples, over the budget of {limit}")


class Shape:
    """Nesting descriptor for tuple positions: flat run or wrapped pair.

    A flat shape of arity n renders as [a, b, ...]; a pair shape renders as
    [[lhs] -> [rhs]] and is what wrap()/unwrap() convert between.  Leaf count
    always equals the arity of the tuples it describes.
    """

    __slots__ = ("kind", "n", "left", "right")

    def __init__(self, kind, n=0, left=None, right=None):
        self.kind = kind
        self.n = n
        self.left = left
        self.right = right

    @staticmethod
    def flat(n: int) -> "Shape":
        if n < 0:
            raise StructuralError("shape arity must be >= 0")
        return Shape("flat", n=n)

    @staticmethod
    def pair(left: "Shape", right: "Shape") -> "Shape":
        return Shape("pair", left=left, right=right)

    @property
    def arity(self) -> int:
        if self.kind == "flat":
            return self.n
        return self.left.arity + self.right.arity

    def __eq__(self, other):
        if not isinstance(other, Shape):
            return NotImplemented
        if self.kind != other.kind:
            return False
        if self.kind == "flat":
            return self.n == other.n
        return self.left == other.left and self.right == other.right

    def __hash__(self):
        if self.kind == "flat":
            return hash(("flat", self.n))
        return hash(("pair", self.left, self.right))

    def __repr__(self):
        if self.kind == "flat":
            return f"Shape.flat({self.n})"
        return f"Shape.pair({self.left!r}, {self.right!r})"

    def format(self, values) -> str:
        """Render one flat tuple under this shape, e.g. [[0] -> [1, 2]]."""
        values = tuple(values)
        if len(values) != self.arity:
            raise StructuralError(f"tuple arity {len(values)} != shape arity {self.arity}")
        if self.kind == "flat":
            return "[" + ", ".join(str(v) for v in values) + "]"
        k = self.left.arity
        return "[" + self.left.format(values[:k]) + " -> " + self.right.format(values[k:]) + "]"


def _canon_tuples(elements, arity, what, budget):
    seen = set()
    out = []
    for el in elements:
        t = tuple(int(v) for v in el)
        if arity is None:
            arity = len(t)
        elif len(t) != arity:
            raise StructuralError(f"{what}: tuple {t} has arity {len(t)}, expected {arity}")
        if t not in seen:
            seen.add(t)
            out.append(t)
            if len(out) % 65536 == 0:
                _check_budget(len(out), budget, what)
    _check_budget(len(out), budget, what)
    out.sort()
    return tuple(out), seen, arity


class IntSet:
    """Finite set of equal-arity integer tuples with a shape."""

    __slots__ = ("shape", "elements", "_memb")

    def __init__(self, elements=(), shape=None, arity=None, budget=None):
        elems, memb, found = _canon_tuples(elements, None, "IntSet", budget)
        if shape is None:
            if arity is None:
                arity = found if found is not None else 0
            shape = Shape.flat(arity)
        if found is not None and found != shape.arity:
            raise StructuralError(f"IntSet: tuples have arity {found}, shape wants {shape.arity}")
        self.shape = shape
        self.elements = elems
        self._memb = frozenset(memb)

    @staticmethod
    def empty(arity: int = 0, shape: Shape | None = None) -> "IntSet":
        return IntSet((), shape=shape, arity=arity)

    @property
    def arity(self) -> int:
        return self.shape.arity

    @property
    def cardinality(self) -> int:
        return len(self.elements)

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, t):
        return tuple(t) in self._memb

    def __eq__(self, other):
        if not isinstance(other, IntSet):
            return NotImplemented
        return self.shape == other.shape and self.elements == other.elements

    def __hash__(self):
        return hash((self.shape, self.elements))

    def __repr__(self):
        return f"IntSet({len(self)} x arity {self.arity})"

    def _require_same(self, other, op):
        if not isinstance(other, IntSet):
            raise StructuralError(f"{op}: expected IntSet, got {type(other).__name__}")
        if self.shape != other.shape:
            raise StructuralError(f"{op}: shape mismatch ({self.shape!r} vs {other.shape!r})")

    def union(self, other: "IntSet") -> "IntSet":
        self._require_same(other, "union")
        return IntSet(itertools.chain(self.elements, other.elements), shape=self.shape)

    def intersect(self, other: "IntSet") -> "IntSet":
        self._require_same(other, "intersect")
        return IntSet((t for t in self.elements if t in other._memb), shape=self.shape)

    def subtract(self, other: "IntSet") -> "IntSet":
        self._require_same(other, "subtract")
        return IntSet((t for t in self.elements if t not in other._memb), shape=self.shape)

    __or__ = union
    __and__ = intersect
    __sub__ = subtract

    def unwrap(self) -> "IntRelation":
        """Inverse of IntRelation.wrap(); requires a pair shape."""
        if self.shape.kind != "pair":
            raise StructuralError("unwrap: set shape is not a wrapped pair")
        k = self.shape.left.arity
        return IntRelation(((t[:k], t[k:]) for t in self.elements),
                           in_shape=self.shape.left, out_shape=self.shape.right)

    def render(self) -> str:
        """Brace notation with explicit elements, e.g. {[0]; [1]}."""
        if not self.elements:
            return "{ }"
        return "{" + "; ".join(self.shape.format(t) for t in self.elements) + "}"


class IntRelation:
    """Finite binary relation between integer tuples, stored as sorted pairs."""

    __slots__ = ("in_shape", "out_shape", "pairs", "_pairset", "_by_in")

    def __init__(self, pairs=(), in_shape=None, out_shape=None,
                 in_arity=None, out_arity=None, budget=None):
        seen = set()
        out = []
        ia = in_shape.arity if in_shape is not None else in_arity
        oa = out_shape.arity if out_shape is not None else out_arity
        for a, b in pairs:
            ta = tuple(int(v) for v in a)
            tb = tuple(int(v) for v in b)
            if ia is None:
                ia = len(ta)
            if oa is None:
                oa = len(tb)
            if len(ta) != ia or len(tb) != oa:
                raise StructuralError(
                    f"IntRelation: pair arity ({len(ta)}, {len(tb)}), expected ({ia}, {oa})")
            p = (ta, tb)
            if p not in seen:
                seen.add(p)
                out.append(p)
                if len(out) % 65536 == 0:
                    _check_budget(len(out), budget, "IntRelation")
        _check_budget(len(out), budget, "IntRelation")
        out.sort()
        self.in_shape = in_shape if in_shape is not None else Shape.flat(ia or 0)
        self.out_shape = out_shape if out_shape is not None else Shape.flat(oa or 0)
        self.pairs = tuple(out)
        self._pairset = frozenset(seen)
        self._by_in = None

    @staticmethod
    def empty(in_arity=0, out_arity=0, in_shape=None, out_shape=None) -> "IntRelation":
        return IntRelation((), in_shape=in_shape, out_shape=out_shape,
                           in_arity=in_arity, out_arity=out_arity)

    @staticmethod
    def identity(values: IntSet) -> "IntRelation":
        return IntRelation(((t, t) for t in values), in_shape=values.shape, out_shape=values.shape)

    @property
    def in_arity(self) -> int:
        return self.in_shape.arity

    @property
    def out_arity(self) -> int:
        return self.out_shape.arity

    @property
    def cardinality(self) -> int:
        return len(self.pairs)

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __contains__(self, pair):
        a, b = pair
        return (tuple(a), tuple(b)) in self._pairset

    def __eq__(self, other):
        if not isinstance(other, IntRelation):
            return NotImplemented
        return (self.in_shape == other.in_shape and self.out_shape == other.out_shape
                and self.pairs == other.pairs)

    def __hash__(self):
        return hash((self.in_shape, self.out_shape, self.pairs))

    def __repr__(self):
        return f"IntRelation({len(self)} x {self.in_arity}->{self.out_arity})"

    def _index(self):
        if self._by_in is None:
            idx = {}
            for a, b in self.pairs:
                idx.setdefault(a, []).append(b)
            self._by_in = idx
        return self._by_in

    def _require_same(self, other, op):
        if not isinstance(other, IntRelation):
            raise StructuralError(f"{op}: expected IntRelation, got {type(other).__name__}")
        if self.in_shape != other.in_shape or self.out_shape != other.out_shape:
            raise StructuralError(f"{op}: shape mismatch")

    def union(self, other: "IntRelation") -> "IntRelation":
        self._require_same(other, "union")
        return IntRelation(itertools.chain(self.pairs, other.pairs),
                           in_shape=self.in_shape, out_shape=self.out_shape)

    def intersect(self, other: "IntRelation") -> "IntRelation":
        self._require_same(other, "intersect")
        return IntRelation((p for p in self.pairs if p in other._pairset),
                           in_shape=self.in_shape, out_shape=self.out_shape)

    def subtract(self, other: "IntRelation") -> "IntRelation":
        self._require_same(other, "subtract")
        return IntRelation((p for p in self.pairs if p not in other._pairset),
                           in_shape=self.in_shape, out_shape=self.out_shape)

    __or__ = union
    __and__ = intersect
    __sub__ = subtract

    def compose(self, other: "IntRelation", budget=None) -> "IntRelation":
        """self o other: apply `other` first, then self (package convention)."""
        if not isinstance(other, IntRelation):
            raise StructuralError("compose: expected IntRelation")
        if other.out_arity != self.in_arity:
            raise StructuralError(
                f"compose: out arity {other.out_arity} != in arity {self.in_arity}")
        idx = self._index()
        limit = element_budget(budget)
        seen = set()
        for a, b in other.pairs:
            for c in idx.get(b, ()):
                p = (a, c)
                if p not in seen:
                    seen.add(p)
                    if len(seen) > limit:
                        raise BudgetError(f"compose result over budget of {limit}")
        return IntRelation(seen, in_shape=other.in_shape, out_shape=self.out_shape)

    def inverse(self) -> "IntRelation":
        return IntRelation(((b, a) for a, b in self.pairs),
                           in_shape=self.out_shape, out_shape=self.in_shape)

    def domain(self) -> IntSet:
        return IntSet((a for a, _ in self.pairs), shape=self.in_shape)

    def range(self) -> IntSet:
        return IntSet((b for _, b in self.pairs), shape=self.out_shape)

    def apply(self, s: IntSet) -> IntSet:
        """Image of s under the relation."""
        if not isinstance(s, IntSet):
            raise StructuralError("apply: expected IntSet")
        if s.arity != self.in_arity:
            raise StructuralError(f"apply: set arity {s.arity} != in arity {self.in_arity}")
        return IntSet((b for a, b in self.pairs if a in s._memb), shape=self.out_shape)

    def restrict_domain(self, s: IntSet) -> "IntRelation":
        if s.arity != self.in_arity:
            raise StructuralError("restrict_domain: arity mismatch")
        return IntRelation(((a, b) for a, b in self.pairs if a in s._memb),
                           in_shape=self.in_shape, out_shape=self.out_shape)

    def wrap(self) -> IntSet:
        """Flatten pairs into a set of concatenated tuples with a pair shape."""
        return IntSet((a + b for a, b in self.pairs),
                      shape=Shape.pair(self.in_shape, self.out_shape))

    def render(self) -> str:
        if not self.pairs:
            return "{ }"
        body = "; ".join(
            self.in_shape.format(a) + " -> " + self.out_shape.format(b) for a, b in self.pairs)
        return "{" + body + "}"


def compose(f: IntRelation, g: IntRelation) -> IntRelation:
    """compose(f, g): apply g first, then f."""
    return f.compose(g)


def lex_lt(values: IntSet) -> IntRelation:
    """Pair every tuple with all lexicographically later tuples of the set."""
    elems = values.elements  # already sorted
    pairs = []
    for i, a in enumerate(elems):
        for b in elems[i + 1:]:
            pairs.append((a, b))
    return IntRelation(pairs, in_shape=values.shape, out_shape=values.shape)


def lex_closest_pred(values: IntSet) -> IntRelation:
    """Pair each tuple with its immediate lexicographic predecessor in the set."""
    elems = values.elements
    return IntRelation(((elems[i], elems[i - 1]) for i in range(1, len(elems))),
                       in_shape=values.shape, out_shape=values.shape)


# --------------------------------------------------------------------------
# Brace-notation parsing: "{[x, y] -> [x, y-1] : x >= 0 and x < 4}"
# --------------------------------------------------------------------------

_ALLOWED_EXPR_NODES = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Name, ast.Constant,
                       ast.Add, ast.Sub, ast.Mult, ast.USub, ast.UAdd, ast.Tuple,
                       ast.Load, ast.FloorDiv, ast.Mod)
_ALLOWED_GUARD_NODES = _ALLOWED_EXPR_NODES + (
    ast.BoolOp, ast.And, ast.Or, ast.Compare,
    ast.Lt, ast.LtE, ast.Gt, ast.GtE, ast.Eq, ast.NotEq)

_VAR_RE = re.compile(r"^[A-Za-z_]\w*$")


def _compile(src: str, variables, allowed, what: str):
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ParseError(f"cannot parse {what} '{src}': {exc}") from None
    for node in ast.walk(tree):
        if not isinstance(node, allowed):
            raise ParseError(f"{what} '{src}': construct {type(node).__name__} not allowed")
        if isinstance(node, ast.Name) and node.id not in variables:
            raise ParseError(f"{what} '{src}': unknown variable '{node.id}'")
        if isinstance(node, ast.Constant) and not isinstance(node.value, int):
            raise ParseError(f"{what} '{src}': only integer constants allowed")
    return compile(tree, "<mapcost>", "eval")


def _split_top(text: str, sep: str):
    """Split on sep at bracket depth zero."""
    parts, depth, cur, i = [], 0, [], 0
    while i < len(text):
        ch = text[i]
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        if depth == 0 and text.startswith(sep, i):
            parts.append("".join(cur))
            cur = []
            i += len(sep)
            continue
        cur.append(ch)
        i += 1
    parts.append("".join(cur))
    return parts


class AffineMap:
    """A parsed brace-notation relation template.

    Holds input variable names, affine output expressions and an optional
    guard.  It turns into a concrete IntRelation either by tabulating over an
    explicit domain of input points or, when the guard bounds every variable,
    by enumerating the guard's bounding box.
    """

    __slots__ = ("in_vars", "src", "_out_code", "_guard_code", "guard_src")

    def __init__(self, in_vars, out_src, guard_src, src):
        self.in_vars = tuple(in_vars)
        self.src = src
        self.guard_src = guard_src
        self._out_code = _compile(out_src, set(in_vars), _ALLOWED_EXPR_NODES, "map expression")
        self._guard_code = (
            _compile(guard_src, set(in_vars), _ALLOWED_GUARD_NODES, "guard")
            if guard_src else None)

    @property
    def in_arity(self) -> int:
        return len(self.in_vars)

    def __eq__(self, other):
        return isinstance(other, AffineMap) and self.src == other.src

    def __hash__(self):
        return hash(self.src)

    def __repr__(self):
        return f"AffineMap({self.src!r})"

    def _eval_point(self, point):
        env = dict(zip(self.in_vars, point))
        if self._guard_code is not None and not eval(self._guard_code, {"__builtins__": {}}, env):
            return None
        out = eval(self._out_code, {"__builtins__": {}}, env)
        if not isinstance(out, tuple):
            out = (out,)
        return tuple(int(v) for v in out)

    def tabulate(self, points, keep=None) -> IntRelation:
        """Apply to each input point; keep(out_tuple) may filter the range."""
        pairs = []
        for point in points:
            point = tuple(point)
            if len(point) != self.in_arity:
                raise StructuralError(
                    f"tabulate: point arity {len(point)} != {self.in_arity} for '{self.src}'")
            out = self._eval_point(point)
            if out is None:
                continue
            if keep is None or keep(out):
                pairs.append((point, out))
        return IntRelation(pairs, in_arity=self.in_arity)

    def enumerate(self, budget=None) -> IntRelation:
        """Enumerate over the box the guard implies; guard must bound all vars."""
        box = _guard_box(self.guard_src, self.in_vars)
        n = 1
        for lo, hi in box:
            n *= max(0, hi - lo + 1)
        _check_budget(n, budget, f"enumeration of '{self.src}'")
        points = itertools.product(*[range(lo, hi + 1) for lo, hi in box])
        return self.tabulate(points)


def _guard_box(guard_src, in_vars):
    """Extract per-variable integer bounds from simple comparison guards."""
    if not guard_src:
        raise ParseError("relation has no guard; cannot bound enumeration")
    lo = {v: None for v in in_vars}
    hi = {v: None for v in in_vars}
    tree = ast.parse(guard_src, mode="eval")

    def visit(node):
        if isinstance(node, ast.BoolOp) and isinstance(node.op, ast.And):
            for v in node.values:
                visit(v)
            return
        if isinstance(node, ast.Compare):
            terms = [node.left] + list(node.comparators)
            for left, op, right in zip(terms, node.ops, terms[1:]):
                _bound(left, op, right)
            return
        raise ParseError(f"guard '{guard_src}' too complex to bound enumeration")

    def _bound(left, op, right):
        # only  var <op> const  or  const <op> var  tighten the box
        def const(n):
            if isinstance(n, ast.Constant) and isinstance(n.value, int):
                return n.value
            if isinstance(n, ast.UnaryOp) and isinstance(n.op, ast.USub):
                inner = const(n.operand)
                return None if inner is None else -inner
            return None

        if isinstance(left, ast.Name) and const(right) is not None:
            v, c = left.id, const(right)
            if isinstance(op, ast.Lt):
                hi[v] = c - 1 if hi[v] is None else min(hi[v], c - 1)
            elif isinstance(op, ast.LtE):
                hi[v] = c if hi[v] is None else min(hi[v], c)
            elif isinstance(op, ast.Gt):
                lo[v] = c + 1 if lo[v] is None else max(lo[v], c + 1)
            elif isinstance(op, ast.GtE):
                lo[v] = c if lo[v] is None else max(lo[v], c)
            elif isinstance(op, ast.Eq):
                lo[v] = hi[v] = c
        elif isinstance(right, ast.Name) and const(left) is not None:
            inv = {ast.Lt: ast.Gt, ast.LtE: ast.GtE, ast.Gt: ast.Lt, ast.GtE: ast.LtE,
                   ast.Eq: ast.Eq}.get(type(op))
            if inv is not None:
                _bound(right, inv(), left)

    visit(tree.body)
    box = []
    for v in in_vars:
        if lo[v] is None or hi[v] is None:
            raise ParseError(f"guard '{guard_src}' does not bound variable '{v}'")
        box.append((lo[v], hi[v]))
    return box


def _parse_var_list(text: str, what: str):
    text = text.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise ParseError(f"{what}: expected [..] tuple, got '{text}'")
    body = text[1:-1].strip()
    if not body:
        return ()
    names = tuple(p.strip() for p in body.split(","))
    for n in names:
        if not _VAR_RE.match(n):
            raise ParseError(f"{what}: bad variable name '{n}'")
    if len(set(names)) != len(names):
        raise ParseError(f"{what}: duplicate variable in '{text}'")
    return names


def parse_map(text: str) -> AffineMap:
    """Parse "{[x, y] -> [x, y-1] : guard}" into an AffineMap template."""
    src = text.strip()
    if not (src.startswith("{") and src.endswith("}")):
        raise ParseError(f"relation must be brace-delimited: '{text}'")
    body = src[1:-1].strip()
    colon = _split_top(body, ":")
    head = colon[0].strip()
    guard = colon[1].strip() if len(colon) > 1 else None
    if len(colon) > 2:
        raise ParseError(f"too many ':' in '{text}'")
    arrow = _split_top(head, "->")
    if len(arrow) != 2:
        raise ParseError(f"relation needs one '->': '{text}'")
    in_vars = _parse_var_list(arrow[0], "relation input")
    out_part = arrow[1].strip()
    if not (out_part.startswith("[") and out_part.endswith("]")):
        raise ParseError(f"relation output must be [..]: '{text}'")
    out_src = out_part[1:-1].strip() or "()"
    return AffineMap(in_vars, out_src, guard, src)


def parse_set(text: str, budget=None) -> IntSet:
    """Parse a brace-notation set.

    Accepts explicit elements "{[0]; [1, 2]}" or a bounded template
    "{[x] : 0 <= x and x < 4}".
    """
    src = text.strip()
    if not (src.startswith("{") and src.endswith("}")):
        raise ParseError(f"set must be brace-delimited: '{text}'")
    body = src[1:-1].strip()
    if not body:
        return IntSet.empty(0)
    if ":" in body and ";" not in body:
        colon = _split_top(body, ":")
        variables = _parse_var_list(colon[0], "set")
        guard = colon[1].strip()
        box = _guard_box(guard, variables)
        n = 1
        for lo, hi in box:
            n *= max(0, hi - lo + 1)
        _check_budget(n, budget, f"enumeration of '{text}'")
        code = _compile(guard, set(variables), _ALLOWED_GUARD_NODES, "guard")
        elems = []
        for point in itertools.product(*[range(lo, hi + 1) for lo, hi in box]):
            env = dict(zip(variables, point))
            if eval(code, {"__builtins__": {}}, env):
                elems.append(point)
        return IntSet(elems, arity=len(variables), budget=budget)
    elems = []
    for part in _split_top(body, ";"):
        part = part.strip()
        if not (part.startswith("[") and part.endswith("]")):
            raise ParseError(f"set element must be [..]: '{part}'")
        inner = part[1:-1].strip()
        values = tuple(int(v.strip()) for v in inner.split(",")) if inner else ()
        elems.append(values)
    return IntSet(elems, budget=budget)
