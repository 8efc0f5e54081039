"""Congruences, commutators, and nilpotency for finite algebras.

A congruence is stored as a canonical partition: ``block_of[x]`` is the
least element of the block containing ``x``.  Generated congruences use
union-find with a worklist that re-substitutes each newly merged pair
into every operation one argument position at a time; iterating that to
a fixpoint yields full compatibility.

The binary commutator is computed inside the subalgebra of A x A whose
universe is one of the congruences: generate a congruence there from
the diagonal pairs of the other, then read off which pairs collapse
onto the diagonal.  The lower central series iterates the commutator
with the full congruence, which yields the nilpotency class.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .algebra import FiniteAlgebra, Operation, Term, term_table


@dataclass(frozen=True)
class Congruence:
    """A partition of {0..size-1} compatible with some algebra's operations."""

    size: int
    block_of: tuple[int, ...]

    @staticmethod
    def from_blocks(size: int, raw: Sequence[int]) -> "Congruence":
        """Canonicalize an arbitrary block labelling."""
        least: dict[int, int] = {}
        for x, b in enumerate(raw):
            if b not in least:
                least[b] = x
        return Congruence(size, tuple(least[b] for b in raw))

    def related(self, a: int, b: int) -> bool:
        return self.block_of[a] == self.block_of[b]

    def blocks(self) -> list[tuple[int, ...]]:
        out: dict[int, list[int]] = {}
        for x, b in enumerate(self.block_of):
            out.setdefault(b, []).append(x)
        return [tuple(out[b]) for b in sorted(out)]

    def block_containing(self, a: int) -> tuple[int, ...]:
        rep = self.block_of[a]
        return tuple(x for x in range(self.size) if self.block_of[x] == rep)

    @property
    def num_blocks(self) -> int:
        return len(set(self.block_of))

    @property
    def is_zero(self) -> bool:
        return self.num_blocks == self.size

    @property
    def is_one(self) -> bool:
        return self.num_blocks == 1

    def pairs(self) -> Iterator[tuple[int, int]]:
        """Related pairs (a, b) with a < b."""
        for a in range(self.size):
            for b in range(a + 1, self.size):
                if self.block_of[a] == self.block_of[b]:
                    yield a, b

    def refines(self, other: "Congruence") -> bool:
        seen: dict[int, int] = {}
        for x in range(self.size):
            mine = self.block_of[x]
            if mine in seen:
                if seen[mine] != other.block_of[x]:
                    return False
            else:
                seen[mine] = other.block_of[x]
        return True

    def meet(self, other: "Congruence") -> "Congruence":
        raw = [
            self.block_of[x] * self.size + other.block_of[x] for x in range(self.size)
        ]
        return Congruence.from_blocks(self.size, raw)

    def __repr__(self) -> str:
        body = "|".join(",".join(map(str, blk)) for blk in self.blocks())
        return f"Congruence[{body}]"


def zero_congruence(size: int) -> Congruence:
    return Congruence(size, tuple(range(size)))


def one_congruence(size: int) -> Congruence:
    return Congruence(size, (0,) * size)


class _UnionFind:
    def __init__(self, size: int):
        self.parent = list(range(size))

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if ra > rb:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True


def congruence_from_pairs(
    algebra: FiniteAlgebra, pairs: Iterable[tuple[int, int]]
) -> Congruence:
    """Least congruence containing the given pairs."""
    uf = _UnionFind(algebra.size)
    work: deque[tuple[int, int]] = deque(pairs)
    grids = [
        (op.arity, algebra.op_array(op.name).reshape((algebra.size,) * op.arity))
        for op in algebra.operations
        if op.arity >= 1
    ]
    while work:
        a, b = work.popleft()
        if not uf.union(a, b):
            continue
        for arity, grid in grids:
            for pos in range(arity):
                left = np.take(grid, a, axis=pos).reshape(-1)
                right = np.take(grid, b, axis=pos).reshape(-1)
                for x, y in zip(left.tolist(), right.tolist()):
                    if uf.find(x) != uf.find(y):
                        work.append((x, y))
    return Congruence.from_blocks(algebra.size, [uf.find(x) for x in range(algebra.size)])


def principal_congruence(algebra: FiniteAlgebra, a: int, b: int) -> Congruence:
    return congruence_from_pairs(algebra, [(a, b)])


def join_congruences(
    algebra: FiniteAlgebra, first: Congruence, *rest: Congruence
) -> Congruence:
    pairs: list[tuple[int, int]] = list(first.pairs())
    for c in rest:
        pairs.extend(c.pairs())
    return congruence_from_pairs(algebra, pairs)


def congruence_lattice(algebra: FiniteAlgebra) -> list[Congruence]:
    """All congruences, as the join closure of the principal ones.

    Sorted from the identity congruence upward (fewer merges first), so
    the first entry is always 0 and the last is always 1.
    """
    found: dict[tuple[int, ...], Congruence] = {}
    zero = zero_congruence(algebra.size)
    found[zero.block_of] = zero
    for a in range(algebra.size):
        for b in range(a + 1, algebra.size):
            c = principal_congruence(algebra, a, b)
            found.setdefault(c.block_of, c)
    frontier = list(found.values())
    while frontier:
        fresh: list[Congruence] = []
        for c in frontier:
            for d in list(found.values()):
                j = join_congruences(algebra, c, d)
                if j.block_of not in found:
                    found[j.block_of] = j
                    fresh.append(j)
        frontier = fresh
    return sorted(found.values(), key=lambda c: (c.size - c.num_blocks, c.block_of))


def lattice_height(congruences: Sequence[Congruence]) -> int:
    """Length (number of covers) of the longest chain in the ordering."""
    order = sorted(congruences, key=lambda c: c.size - c.num_blocks)
    best = [0] * len(order)
    for i, c in enumerate(order):
        for j in range(i):
            d = order[j]
            if d.block_of != c.block_of and d.refines(c):
                best[i] = max(best[i], best[j] + 1)
    return max(best, default=0)


@dataclass(frozen=True)
class QuotientResult:
    """A quotient algebra with the maps between it and its parent."""

    algebra: FiniteAlgebra
    to_class: tuple[int, ...]  # parent element -> quotient element
    representative: tuple[int, ...]  # quotient element -> least parent element


def quotient_algebra(
    parent: FiniteAlgebra, cong: Congruence, name: str | None = None
) -> QuotientResult:
    """Quotient by a congruence; class i is the i-th block by least element."""
    reps = sorted(set(cong.block_of))
    class_of = {rep: i for i, rep in enumerate(reps)}
    to_class = tuple(class_of[cong.block_of[x]] for x in range(parent.size))
    q = len(reps)
    ops = []
    for op in parent.operations:
        if op.arity == 0:
            table = (to_class[op.table[0]],)
        else:
            table = tuple(
                to_class[parent.apply(op.name, [reps[c] for c in combo])]
                for combo in itertools.product(range(q), repeat=op.arity)
            )
        ops.append(Operation(op.name, op.arity, table))
    alg = FiniteAlgebra(name or f"{parent.name}/~", q, ops)
    return QuotientResult(alg, to_class, tuple(reps))


def _pair_algebra(
    algebra: FiniteAlgebra, cong: Congruence
) -> tuple[FiniteAlgebra, list[tuple[int, int]], dict[tuple[int, int], int]]:
    """Subalgebra of A x A whose universe is the congruence, componentwise ops."""
    members = [(a, b) for a in range(algebra.size) for b in range(algebra.size) if cong.related(a, b)]
    pair_id = {p: i for i, p in enumerate(members)}
    m = len(members)
    firsts = np.array([p[0] for p in members], dtype=np.int64)
    seconds = np.array([p[1] for p in members], dtype=np.int64)
    size = algebra.size
    ops = []
    for op in algebra.operations:
        if op.arity == 0:
            v = op.table[0]
            ops.append(Operation(op.name, 0, (pair_id[(v, v)],)))
            continue
        flat = algebra.op_array(op.name).astype(np.int64)
        idx_first = np.zeros((m,) * op.arity, dtype=np.int64)
        idx_second = np.zeros((m,) * op.arity, dtype=np.int64)
        for pos in range(op.arity):
            shape = [1] * op.arity
            shape[pos] = m
            idx_first = idx_first * size + firsts.reshape(shape)
            idx_second = idx_second * size + seconds.reshape(shape)
        out_first = flat[idx_first]
        out_second = flat[idx_second]
        table = []
        for f, s in zip(out_first.reshape(-1).tolist(), out_second.reshape(-1).tolist()):
            table.append(pair_id[(f, s)])
        ops.append(Operation(op.name, op.arity, tuple(table)))
    big = FiniteAlgebra(f"{algebra.name}^pairs", m, ops)
    return big, members, pair_id


def commutator(algebra: FiniteAlgebra, alpha: Congruence, beta: Congruence) -> Congruence:
    """Binary term-condition commutator of two congruences.

    Works inside the pair subalgebra over beta: the congruence generated
    there by identifying (a,a) with (b,b) for all alpha-pairs tells us
    which beta-pairs are forced onto the diagonal.
    """
    big, members, pair_id = _pair_algebra(algebra, beta)
    gens = [
        (pair_id[(a, a)], pair_id[(b, b)])
        for a, b in alpha.pairs()
    ]
    delta = congruence_from_pairs(big, gens)
    forced = [
        (x, y)
        for (x, y) in members
        if x != y and delta.related(pair_id[(x, y)], pair_id[(y, y)])
    ]
    return congruence_from_pairs(algebra, forced)


def lower_central_series(algebra: FiniteAlgebra) -> list[Congruence]:
    """Iterated commutators with the full congruence, until stable.

    The list starts at the full congruence; if the algebra is nilpotent
    the last entry is the identity congruence.
    """
    series = [one_congruence(algebra.size)]
    while True:
        nxt = commutator(algebra, one_congruence(algebra.size), series[-1])
        if nxt.block_of == series[-1].block_of:
            return series
        series.append(nxt)
        if nxt.is_zero:
            return series


def nilpotency_class(algebra: FiniteAlgebra) -> int | None:
    """Least m with the (m+1)-st lower central term trivial, or None."""
    series = lower_central_series(algebra)
    if not series[-1].is_zero:
        return None
    return len(series) - 1


def is_central_congruence(algebra: FiniteAlgebra, zeta: Congruence) -> bool:
    """Whether the commutator of zeta with the full congruence is trivial."""
    return commutator(algebra, zeta, one_congruence(algebra.size)).is_zero


def has_uniform_blocks(cong: Congruence) -> bool:
    sizes = {len(b) for b in cong.blocks()}
    return len(sizes) <= 1


def is_congruence_uniform(algebra: FiniteAlgebra) -> bool:
    """Whether every congruence of the algebra has blocks of equal size."""
    return all(has_uniform_blocks(c) for c in congruence_lattice(algebra))


def congruences_between(
    lattice: Sequence[Congruence], low: Congruence, high: Congruence
) -> list[Congruence]:
    return [c for c in lattice if low.refines(c) and c.refines(high)]


def maximal_congruence_chain(algebra: FiniteAlgebra) -> list[Congruence]:
    """An unrefinable chain from the identity to the full congruence.

    Deterministic: at each step the first cover of the current
    congruence in the lattice's canonical order is taken.
    """
    lattice = congruence_lattice(algebra)
    cur = zero_congruence(algebra.size)
    chain = [cur]
    while not cur.is_one:
        ups = [g for g in lattice if cur.refines(g) and g != cur]
        for g in ups:
            if not any(h != g and cur.refines(h) and h.refines(g) for h in ups):
                cur = g
                break
        else:  # pragma: no cover - ups always contains the full congruence
            raise RuntimeError("no cover found above a non-full congruence")
        chain.append(cur)
    return chain


@dataclass(frozen=True)
class CentralSeries:
    """A chain of congruences from identity to full, each level central
    over the previous one: the commutator of the full congruence with
    level i must lie below level i-1."""

    congruences: tuple[Congruence, ...]

    @property
    def length(self) -> int:
        return len(self.congruences) - 1

    def __iter__(self) -> Iterator[Congruence]:
        return iter(self.congruences)


def central_series(
    algebra: FiniteAlgebra, congruences: Sequence[Congruence]
) -> CentralSeries:
    """Validate a candidate chain and wrap it as a CentralSeries.

    Raises ValueError naming the first level where monotonicity or
    centrality fails.
    """
    chain = tuple(congruences)
    if not chain:
        raise ValueError("a central series needs at least one congruence")
    if not chain[0].is_zero:
        raise ValueError("series must start at the identity congruence")
    if not chain[-1].is_one:
        raise ValueError("series must end at the full congruence")
    one = one_congruence(algebra.size)
    for i in range(1, len(chain)):
        if not chain[i - 1].refines(chain[i]):
            raise ValueError(f"series is not monotone at level {i}")
        if not commutator(algebra, one, chain[i]).refines(chain[i - 1]):
            raise ValueError(f"series is not central at level {i}")
    return CentralSeries(chain)


def central_series_from_lower_central(algebra: FiniteAlgebra) -> CentralSeries | None:
    """The reversed lower central series, or None if not nilpotent."""
    lcs = lower_central_series(algebra)
    if not lcs[-1].is_zero:
        return None
    return CentralSeries(tuple(reversed(lcs)))


def quotient_congruence(quotient: QuotientResult, gamma: Congruence) -> Congruence:
    """Image of a congruence in a quotient whose kernel lies below it."""
    for x, cls in enumerate(quotient.to_class):
        if not gamma.related(x, quotient.representative[cls]):
            raise ValueError("congruence does not contain the quotient kernel")
    labels = [gamma.block_of[rep] for rep in quotient.representative]
    return Congruence.from_blocks(len(quotient.representative), labels)


def relation_preservation_witness(
    table: np.ndarray,
    arity: int,
    size: int,
    tuples: np.ndarray,
    member: Callable[[np.ndarray], np.ndarray],
    chunk: int = 1 << 18,
) -> tuple[tuple[int, ...], ...] | None:
    """First counterexample to an operation preserving a k-ary relation.

    tuples is an (r, k) array of relation rows; member maps an (n, k)
    array of candidate rows to a boolean vector.  Applying the operation
    coordinatewise to every choice of arity-many rows must land back in
    the relation; the first offending choice is returned as actual rows.
    """
    flat = table.reshape(-1).astype(np.int64)
    r, k = tuples.shape
    cols = tuples.astype(np.int64)
    if arity == 0:
        row = np.full((1, k), flat[0], dtype=np.int64)
        if bool(member(row)[0]):
            return None
        return ()
    total = r**arity
    weights = [r**j for j in range(arity - 1, -1, -1)]
    for lo in range(0, total, chunk):
        hi = min(lo + chunk, total)
        combo = np.arange(lo, hi, dtype=np.int64)
        picks = [(combo // w) % r for w in weights]
        args = np.zeros((hi - lo, k), dtype=np.int64)
        for pick in picks:
            args = args * size + cols[pick]
        out = flat[args]
        ok = member(out)
        if not ok.all():
            at = int(np.flatnonzero(~ok)[0])
            return tuple(tuple(cols[int(p[at])]) for p in picks)
    return None


def _malcev_grid(algebra: FiniteAlgebra, d: Term) -> np.ndarray:
    grid = term_table(algebra, d, 3).as_grid()
    s = algebra.size
    for x in range(s):
        for y in range(s):
            if grid[x, y, y] != x or grid[x, x, y] != y:
                raise ValueError("term does not satisfy the Mal'cev identities")
    return grid


def centrality_check(algebra: FiniteAlgebra, zeta: Congruence, d: Term) -> bool:
    """Whether zeta is central, tested relationally.

    Builds the 4-ary relation of pairs (a1,a2) in zeta extended by any
    a3 and the value d(a1,a2,a3), and checks that every fundamental
    operation preserves it.  Equivalent to the commutator of zeta with
    the full congruence being trivial.
    """
    grid = _malcev_grid(algebra, d)
    s = algebra.size
    rows = []
    for a1 in range(s):
        for a2 in range(s):
            if not zeta.related(a1, a2):
                continue
            for a3 in range(s):
                rows.append((a1, a2, a3, int(grid[a1, a2, a3])))
    tuples = np.array(rows, dtype=np.int64)
    zb = np.array(zeta.block_of, dtype=np.int64)
    dflat = grid.reshape(-1).astype(np.int64)

    def member(cand: np.ndarray) -> np.ndarray:
        lookup = dflat[(cand[:, 0] * s + cand[:, 1]) * s + cand[:, 2]]
        return (zb[cand[:, 0]] == zb[cand[:, 1]]) & (lookup == cand[:, 3])

    for op in algebra.operations:
        bad = relation_preservation_witness(
            algebra.op_array(op.name), op.arity, s, tuples, member
        )
        if bad is not None:
            return False
    return True
