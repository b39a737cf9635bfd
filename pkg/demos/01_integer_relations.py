"""Tour of the bounded integer set/relation engine.

Everything downstream (schedules, access functions, placements) is carried
by these two types, so this is the right place to start.
"""

from mapcost import IntRelation, IntSet, compose, lex_closest_pred, lex_lt, \
    parse_map, parse_set

# --- sets are finite, deduplicated, lexicographically sorted ---------------
a = IntSet([(0,), (1,), (1,)])
b = IntSet([(1,), (2,)])
print("a          =", a.render())
print("a union b  =", (a | b).render())
print("a inter b  =", (a & b).render())
print("a minus b  =", (a - b).render())

# --- relations compose right-to-left: compose(f, g) applies g first --------
g_rel = IntRelation([((0,), (1,))])
f_rel = IntRelation([((1,), (5,))])
print("\nf o g      =", compose(f_rel, g_rel).render())
print("inverse    =", f_rel.inverse().render())
print("domain     =", f_rel.domain().render())

# --- wrapping nests a relation inside a set, losslessly --------------------
wrapped = f_rel.wrap()
print("\nwrapped    =", wrapped.render())
print("round trip ==", wrapped.unwrap() == f_rel)

# --- lexicographic orderings over time-stamp vectors ------------------------
stamps = IntSet([(0, 1), (1, 0), (0, 0)])
print("\nstamps          =", stamps.render())
print("closest pred    =", lex_closest_pred(stamps).render())
print("all lex-later   =", lex_lt(stamps).render())

# --- brace notation: templates with affine expressions and guards ----------
down = parse_map("{[x, y] -> [x, y - 1]}")
grid = [(x, y) for x in range(4) for y in range(4)]
rel = down.tabulate(grid, keep=lambda t: 0 <= t[1] < 4)
print("\ndownward links on a 4x4 grid:", rel.cardinality, "pairs")

box = parse_set("{[x, y] : 0 <= x < 2 and 0 <= y < 3}")
print("guarded box:", box.render())
