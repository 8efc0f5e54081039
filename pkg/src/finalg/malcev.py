"""Mal'cev term discovery and the derived local addition.

A Mal'cev function d satisfies d(x,y,y) = x and d(x,x,y) = y.  Once a
zero element o is fixed, d induces near-group operations

    x + y := d(x, o, y)      x - y := d(x, y, o)      -y := d(o, y, o)

which behave like an abelian group up to commutator congruences.  This
module finds a witness term for d by breadth-first closure search and
checks the nine local-group laws that the rest of the package relies on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import CapExceeded, FiniteAlgebra, FiniteFunction, Operation, Term
from .clones import term_functions
from .congruence import Congruence, commutator


@dataclass(frozen=True)
class MalcevWitness:
    """A ternary term whose induced function satisfies both Mal'cev identities."""

    term: Term
    function: FiniteFunction
    verified: bool

    def grid(self) -> np.ndarray:
        return self.function.as_grid()


def _identity_mask(tables: np.ndarray, size: int) -> np.ndarray:
    """Boolean mask over rows of ternary tables: which satisfy both identities."""
    xs = np.arange(size, dtype=np.int64)
    x = np.repeat(xs, size)
    y = np.tile(xs, size)
    # row layout is x*size^2 + y*size + z, leftmost argument most significant
    idx_xyy = x * size * size + y * size + y
    idx_xxy = x * size * size + x * size + y
    ok_first = (tables[:, idx_xyy] == x[np.newaxis, :]).all(axis=1)
    ok_second = (tables[:, idx_xxy] == y[np.newaxis, :]).all(axis=1)
    return ok_first & ok_second


def find_malcev_term(
    algebra: FiniteAlgebra,
    depth_cap: int | None = None,
    cap: int = 1 << 20,
) -> MalcevWitness | None:
    """Search the ternary term functions for a Mal'cev witness.

    Returns the first witness found by breadth-first closure (so the
    term has minimal composition depth), or None when the exhaustive
    closure contains no such function.  When the search is cut off by
    depth_cap or cap before finding one, the answer is unknown and
    CapExceeded is raised instead of returning None.
    """
    closure = term_functions(algebra, 3, cap=cap, strategy="bfs", depth_cap=depth_cap)
    tables = closure.tables.astype(np.int64, copy=False)
    mask = _identity_mask(tables, algebra.size)
    hits = np.flatnonzero(mask)
    if hits.size == 0:
        if closure.capped:
            raise CapExceeded(
                "closure search cut off before finding a Mal'cev term; "
                "existence is undecided at this cap"
            )
        return None
    first = int(hits[0])
    func = FiniteFunction(3, algebra.size, closure.tables[first].tobytes())
    return MalcevWitness(term=closure.term_for(first), function=func, verified=True)


def plus_minus_o(
    algebra: FiniteAlgebra, d: MalcevWitness, o: int
) -> tuple[FiniteFunction, FiniteFunction, FiniteFunction]:
    """Derived operations (x+y, x-y, -y) at zero o, as function tables."""
    if not 0 <= o < algebra.size:
        raise ValueError(f"zero element {o} outside 0..{algebra.size - 1}")
    grid = d.grid()
    size = algebra.size
    plus = FiniteFunction(2, size, np.ascontiguousarray(grid[:, o, :]).tobytes())
    minus = FiniteFunction(2, size, np.ascontiguousarray(grid[:, :, o]).tobytes())
    neg = FiniteFunction(1, size, np.ascontiguousarray(grid[o, :, o]).tobytes())
    return plus, minus, neg


@dataclass(frozen=True)
class PlusProperty:
    index: int
    description: str
    holds: bool
    counterexample: tuple[int, ...] | None


@dataclass(frozen=True)
class PlusPropertiesReport:
    zero: int
    items: tuple[PlusProperty, ...]

    @property
    def all_hold(self) -> bool:
        return all(item.holds for item in self.items)

    def failures(self) -> tuple[PlusProperty, ...]:
        return tuple(item for item in self.items if not item.holds)


def check_plus_properties(
    algebra: FiniteAlgebra,
    d: MalcevWitness,
    o: int,
    alpha: Congruence,
    beta: Congruence,
) -> PlusPropertiesReport:
    """Exhaustively check the nine local-group laws of the derived addition.

    Items 1 and 2 are on-the-nose equalities.  Items 3 to 7 hold modulo
    the commutator [alpha,beta] under their stated membership
    preconditions, and items 8 and 9 (the two inverse laws) hold modulo
    [alpha,alpha].  Each failed item carries the first offending tuple.
    """
    size = algebra.size
    grid = d.grid()
    plus, minus, neg = plus_minus_o(algebra, d, o)
    p = plus.as_grid()
    m = minus.as_grid()
    n = neg.as_array()

    comm_ab = commutator(algebra, alpha, beta)
    comm_aa = commutator(algebra, alpha, alpha)

    def cong(gamma: Congruence, x: int, y: int) -> bool:
        return gamma.block_of[x] == gamma.block_of[y]

    results: list[PlusProperty] = []

    def record(index: int, description: str, counterexample: tuple[int, ...] | None) -> None:
        results.append(
            PlusProperty(index, description, counterexample is None, counterexample)
        )

    bad: tuple[int, ...] | None = None
    for a in range(size):
        if not (p[a, o] == a and p[o, a] == a and m[a, o] == a):
            bad = (a,)
            break
    record(1, "a+o = o+a = a-o = a", bad)

    bad = None
    for a in range(size):
        if m[a, a] != o:
            bad = (a,)
            break
    record(2, "a-a = o", bad)

    bad = None
    for a in range(size):
        for b in range(size):
            if not (alpha.related(a, b) and beta.related(b, o)):
                continue
            if not cong(comm_ab, p[m[a, b], b], a):
                bad = (a, b)
                break
        if bad:
            break
    record(3, "(a-b)+b = a mod [alpha,beta] when a~alpha~b~beta~o", bad)

    # items 4..7 share the precondition a alpha o and o beta b
    left = [a for a in range(size) if alpha.related(a, o)]
    right = [b for b in range(size) if beta.related(o, b)]

    bad = None
    for a in left:
        for b in right:
            if not cong(comm_ab, m[p[a, b], b], a):
                bad = (a, b)
                break
        if bad:
            break
    record(4, "(a+b)-b = a mod [alpha,beta] when a~alpha~o~beta~b", bad)

    bad = None
    for a in left:
        for b in right:
            if not cong(comm_ab, p[a, b], p[b, a]):
                bad = (a, b)
                break
        if bad:
            break
    record(5, "a+b = b+a mod [alpha,beta] when a~alpha~o~beta~b", bad)

    bad = None
    for a in left:
        for b in right:
            for c in range(size):
                if not cong(comm_ab, p[p[a, b], c], p[a, p[b, c]]):
                    bad = (a, b, c)
                    break
            if bad:
                break
        if bad:
            break
    record(6, "(a+b)+c = a+(b+c) mod [alpha,beta] when a~alpha~o~beta~b", bad)

    bad = None
    for a in left:
        for b in right:
            for c in range(size):
                if not cong(comm_ab, grid[p[a, b], b, c], p[a, c]):
                    bad = (a, b, c)
                    break
            if bad:
                break
        if bad:
            break
    record(7, "d(a+b,b,c) = a+c mod [alpha,beta] when a~alpha~o~beta~b", bad)

    bad = None
    for a in left:
        if not cong(comm_aa, p[n[a], a], o):
            bad = (a,)
            break
    record(8, "(-a)+a = o mod [alpha,alpha] when a~alpha~o", bad)

    bad = None
    for a in left:
        if not cong(comm_aa, p[a, n[a]], o):
            bad = (a,)
            break
    record(9, "a+(-a) = o mod [alpha,alpha] when a~alpha~o", bad)

    return PlusPropertiesReport(zero=o, items=tuple(results))


def zero_block_group(
    algebra: FiniteAlgebra, d: MalcevWitness, o: int, alpha: Congruence
) -> tuple[FiniteAlgebra, tuple[int, ...]]:
    """The congruence block of o as an algebra under the derived addition.

    For a,b in the block of o, both a+b and -a land back in the block,
    so the restriction is total.  When [alpha,alpha] is trivial the
    result satisfies all abelian group axioms; callers wanting that
    guarantee should verify it on the returned tables.  Returns the
    block algebra (elements relabelled 0..k-1, operations "+", "neg",
    "zero") together with the tuple of original elements.
    """
    plus, _, neg = plus_minus_o(algebra, d, o)
    elements = tuple(x for x in range(algebra.size) if alpha.related(x, o))
    rank = {x: i for i, x in enumerate(elements)}
    k = len(elements)
    p = plus.as_grid()
    n = neg.as_array()
    plus_table = [rank[int(p[a, b])] for a in elements for b in elements]
    neg_table = [rank[int(n[a])] for a in elements]
    block = FiniteAlgebra(
        f"{algebra.name}|block of {o}",
        k,
        [
            Operation("+", 2, tuple(plus_table)),
            Operation("neg", 1, tuple(neg_table)),
            Operation("zero", 0, (rank[o],)),
        ],
    )
    return block, elements
