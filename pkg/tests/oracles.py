"""Slow reference implementations used only to validate the fast paths.

Everything here works on plain Python tuples and recomputes from first
principles: clone closure by naive fixpoint iteration, congruences by
checking the definition against every operation, commutators via the
term-condition matrices.  Nothing imports the modules under test except
for the shared table containers.
"""
from __future__ import annotations

import itertools

from finalg.algebra import FiniteAlgebra, unflatten_index


def naive_closure(
    algebra: FiniteAlgebra, arity: int, with_constants: bool
) -> set[tuple[int, ...]]:
    """Fixpoint closure of projections (and constants) under composition."""
    size = algebra.size
    wid = size**arity
    found: dict[tuple[int, ...], None] = {}

    def add(tab):
        found.setdefault(tuple(tab), None)

    for i in range(arity):
        add(unflatten_index(f, size, arity)[i] for f in range(wid))
    if with_constants:
        for v in range(size):
            add((v,) * wid)
    for op in algebra.operations:
        if op.arity == 0:
            add((op.table[0],) * wid)

    changed = True
    while changed:
        changed = False
        snapshot = list(found)
        before = len(found)
        for op in algebra.operations:
            if op.arity == 0:
                continue
            tab = op.table
            for combo in itertools.product(snapshot, repeat=op.arity):
                out = []
                for cell in range(wid):
                    idx = 0
                    for f in combo:
                        idx = idx * size + f[cell]
                    out.append(tab[idx])
                add(out)
        changed = len(found) > before
    return set(found)


def all_partitions(n: int):
    """Every partition of {0..n-1}, as a tuple of block ids per element."""
    if n == 0:
        yield ()
        return
    for smaller in all_partitions(n - 1):
        blocks = max(smaller, default=-1) + 1
        for b in range(blocks + 1):
            yield smaller + (b,)


def respects_operations(algebra: FiniteAlgebra, block_of) -> bool:
    """Definition check: every operation maps related tuples to related."""
    size = algebra.size
    for op in algebra.operations:
        if op.arity == 0:
            continue
        for xs in itertools.product(range(size), repeat=op.arity):
            fx = algebra.apply(op.name, xs)
            for pos in range(op.arity):
                for y in range(size):
                    if block_of[y] != block_of[xs[pos]]:
                        continue
                    ys = xs[:pos] + (y,) + xs[pos + 1 :]
                    if block_of[algebra.apply(op.name, ys)] != block_of[fx]:
                        return False
    return True


def brute_congruences(algebra: FiniteAlgebra) -> list[tuple[int, ...]]:
    """All congruences by filtering every partition (small sizes only)."""
    return [
        part
        for part in all_partitions(algebra.size)
        if respects_operations(algebra, part)
    ]


def subuniverse_of_power(
    algebra: FiniteAlgebra, power: int, generators: set[tuple[int, ...]]
) -> set[tuple[int, ...]]:
    """Subuniverse of algebra^power generated coordinatewise."""
    import numpy as np

    size = algebra.size
    found = set(generators)
    for op in algebra.operations:
        if op.arity == 0:
            found.add((op.table[0],) * power)
    changed = True
    while changed:
        changed = False
        rows = np.array(sorted(found), dtype=np.int64).reshape(len(found), power)
        n = len(rows)
        for op in algebra.operations:
            if op.arity == 0:
                continue
            tab = np.asarray(op.table, dtype=np.int64)
            chunk = max(1, (1 << 20) // max(1, n ** (op.arity - 1)))
            for start in range(0, n, chunk):
                cur = rows[start : start + chunk]
                for _ in range(op.arity - 1):
                    cur = (cur[:, None, :] * size + rows[None, :, :]).reshape(-1, power)
                out = tab[cur]
                for vec in map(tuple, np.unique(out, axis=0).tolist()):
                    if vec not in found:
                        found.add(vec)
                        changed = True
    return found


def eval_poly_text(text: str, modulus: int, assignment: dict[int, int]) -> int:
    """Evaluate the serialized polynomial format over a prime modulus.

    Works directly on the text with integer arithmetic, so it shares no
    code with the polynomial module.  Only prime moduli make sense here.
    """
    body = text.strip()
    if body == "0":
        return 0
    total = 0
    for chunk in body.split(" + "):
        value = 1
        for factor in chunk.split("*"):
            factor = factor.strip()
            if factor.isdigit():
                value *= int(factor)
            else:
                assert factor.startswith("x")
                var, _, exp = factor[1:].partition("^")
                value *= assignment[int(var)] ** int(exp or 1)
        total += value
    return total % modulus


def tc_commutator_blocks(
    algebra: FiniteAlgebra,
    alpha_pairs: set[tuple[int, int]],
    beta_pairs: set[tuple[int, int]],
) -> tuple[tuple[int, ...], set[tuple[int, int]]]:
    """Term-condition commutator via the matrix subuniverse.

    Generates the subuniverse of A^4 from alpha rows, beta columns and
    constant squares, then forces (u ~ v whenever a matrix has equal top
    entries but unequal bottom ones) into a congruence by least fixpoint.
    """
    size = algebra.size
    # matrix layout (top-left, top-right, bottom-left, bottom-right)
    gens: set[tuple[int, ...]] = set()
    for a, b in alpha_pairs:
        gens.add((a, a, b, b))
    for c, d in beta_pairs:
        gens.add((c, d, c, d))
    for x in range(size):
        gens.add((x, x, x, x))
    matrices = subuniverse_of_power(algebra, 4, gens)

    parent = list(range(size))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[max(rx, ry)] = min(rx, ry)
            return True
        return False

    changed = True
    while changed:
        changed = False
        for m in matrices:
            tl, tr, bl, br = m
            if find(tl) == find(tr) and union(bl, br):
                changed = True
            if find(bl) == find(br) and union(tl, tr):
                changed = True
        # close the merged partition into a congruence as well
        for op in algebra.operations:
            if op.arity == 0:
                continue
            for xs in itertools.product(range(size), repeat=op.arity):
                fx = algebra.apply(op.name, xs)
                for pos in range(op.arity):
                    for y in range(size):
                        if find(y) != find(xs[pos]):
                            continue
                        ys = xs[:pos] + (y,) + xs[pos + 1 :]
                        if union(algebra.apply(op.name, ys), fx):
                            changed = True
    block_of = tuple(find(x) for x in range(size))
    pairs = {
        (x, y)
        for x in range(size)
        for y in range(size)
        if block_of[x] == block_of[y]
    }
    return block_of, pairs
