"""Clones of term and polynomial functions on a finite algebra.

Two closure strategies share one result type:

* an explicit breadth-first closure over composition, deterministic
  (seed order, then operation order, then operand order) so the first
  witness of any property is reproducible and terms come out at
  minimal depth;

* a span strategy for algebras all of whose operations are multilinear
  over a designated abelian group operation (detected by table checks).
  There the closure is the subgroup generated by finitely many
  independent generators, and compositions only ever need to run over
  generator tuples: f(sum n_i g_i, sum m_j h_j) expands by
  multilinearity into a combination of the f(g_i, h_j).  This makes
  closures with tens of thousands of members exact and cheap.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import gcd
from typing import Iterator

import numpy as np

from .algebra import App, Const, FiniteAlgebra, FiniteFunction, Term, Var

DEFAULT_CAP = 1 << 20

Recipe = tuple


@dataclass
class SpanStructure:
    """An abelian group operation under which every other op is multilinear."""

    plus_name: str
    plus: np.ndarray  # (size, size)
    zero: int
    neg: np.ndarray  # (size,)
    exponent: int

    @property
    def prime(self) -> bool:
        n = self.exponent
        return n > 1 and all(n % k for k in range(2, int(n**0.5) + 1))


def _abelian_group_info(tab: np.ndarray) -> tuple[int, np.ndarray, int] | None:
    size = tab.shape[0]
    if not np.array_equal(tab, tab.T):
        return None
    ident = None
    for e in range(size):
        if np.array_equal(tab[e], np.arange(size, dtype=tab.dtype)):
            ident = e
            break
    if ident is None:
        return None
    left = tab[tab.reshape(-1), :].reshape(size, size, size)
    right = tab[:, tab.reshape(-1)].reshape(size, size, size)
    if not np.array_equal(left, right):
        return None
    neg = np.full(size, -1, dtype=np.int64)
    for a in range(size):
        hits = np.nonzero(tab[a] == ident)[0]
        if len(hits) == 0:
            return None
        neg[a] = hits[0]
    exponent = 1
    for a in range(size):
        order, x = 1, a
        while x != ident:
            x = tab[x, a]
            order += 1
        exponent = exponent * order // gcd(exponent, order)
    return ident, neg, int(exponent)


def _is_multilinear(grid: np.ndarray, plus: np.ndarray) -> bool:
    size = plus.shape[0]
    for j in range(grid.ndim):
        lhs = np.take(grid, plus.reshape(-1), axis=j)
        shape = grid.shape[:j] + (size, size) + grid.shape[j + 1 :]
        lhs = lhs.reshape(shape)
        a = np.expand_dims(grid, axis=j + 1)
        b = np.expand_dims(grid, axis=j)
        if not np.array_equal(lhs, plus[a, b]):
            return False
    return True


def additive_structure(algebra: FiniteAlgebra) -> SpanStructure | None:
    """Detect a group operation making the whole signature multilinear."""
    for op in algebra.operations:
        if op.arity != 2:
            continue
        tab = algebra.op_array(op.name).reshape(algebra.size, algebra.size)
        info = _abelian_group_info(tab)
        if info is None:
            continue
        zero, neg, exponent = info
        ok = True
        for other in algebra.operations:
            if other.name == op.name or other.arity == 0:
                continue
            grid = algebra.op_array(other.name).reshape((algebra.size,) * other.arity)
            if not _is_multilinear(grid, tab):
                ok = False
                break
        if ok:
            return SpanStructure(op.name, tab, zero, neg, exponent)
    return None


@dataclass
class ClosureResult:
    """The (possibly partial) set of functions reached by a closure."""

    algebra: FiniteAlgebra
    arity: int
    strategy: str
    tables: np.ndarray  # (count, size**arity) uint8, deterministic order
    index: dict[bytes, int]
    recipes: list[Recipe]
    capped: bool
    exact_count: int | None  # known even when materialization was capped
    span: SpanStructure | None = None
    generator_tables: np.ndarray | None = None  # span strategy only
    core_recipes: list[Recipe] = field(default_factory=list)
    generator_core_ids: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return self.tables.shape[0]

    @property
    def count(self) -> int:
        """Best known size of the closure; a lower bound only when capped
        without span structure."""
        return self.exact_count if self.exact_count is not None else len(self)

    @property
    def exact(self) -> bool:
        return self.exact_count is not None or not self.capped

    def __contains__(self, f: FiniteFunction) -> bool:
        if f.arity != self.arity or f.size != self.algebra.size:
            return False
        return f.values in self.index

    def function(self, fid: int) -> FiniteFunction:
        return FiniteFunction(self.arity, self.algebra.size, self.tables[fid].tobytes())

    def functions(self) -> list[FiniteFunction]:
        return [self.function(i) for i in range(len(self))]

    def __iter__(self) -> Iterator[FiniteFunction]:
        return iter(self.functions())

    def term_for(self, fid: int) -> Term:
        memo: dict[int, Term] = {}
        core_memo: dict[int, Term] = {}
        plus = self.span.plus_name if self.span is not None else None

        def build_core(cid: int) -> Term:
            if cid in core_memo:
                return core_memo[cid]
            t = self._term_from(self.core_recipes[cid], build_core, build_core)
            core_memo[cid] = t
            return t

        def build(i: int) -> Term:
            if i in memo:
                return memo[i]
            recipe = self.recipes[i]
            if recipe[0] == "core":
                t = build_core(recipe[1])
            elif recipe[0] == "lincomb":
                parts: list[Term] = []
                for cid, mult in recipe[1]:
                    g = build_core(cid)
                    parts.extend([g] * mult)
                if not parts:
                    g = build_core(self.generator_core_ids[0])
                    parts = [g] * self.span.exponent
                t = parts[0]
                for part in parts[1:]:
                    t = App(plus, (t, part))
            else:
                t = self._term_from(recipe, build, build)
            memo[i] = t
            return t

        return build(fid)

    @staticmethod
    def _term_from(recipe: Recipe, build, build_arg) -> Term:
        kind = recipe[0]
        if kind == "var":
            return Var(recipe[1])
        if kind == "const":
            return Const(recipe[1])
        if kind == "nullary":
            return App(recipe[1], ())
        if kind == "op":
            return App(recipe[1], tuple(build_arg(j) for j in recipe[2]))
        raise ValueError(f"unknown recipe {recipe!r}")


def _seed_rows(
    algebra: FiniteAlgebra, arity: int, with_constants: bool
) -> list[tuple[np.ndarray, Recipe]]:
    size = algebra.size
    wid = size**arity
    seeds: list[tuple[np.ndarray, Recipe]] = []
    for i in range(arity):
        reps = size**i
        tile = np.repeat(np.arange(size, dtype=np.uint8), wid // size ** (i + 1))
        seeds.append((np.tile(tile, reps), ("var", i)))
    if with_constants:
        for v in range(size):
            seeds.append((np.full(wid, v, dtype=np.uint8), ("const", v)))
    return seeds


def _empty_result(algebra: FiniteAlgebra, arity: int, strategy: str) -> ClosureResult:
    wid = algebra.size**arity
    return ClosureResult(
        algebra, arity, strategy, np.empty((0, wid), dtype=np.uint8), {}, [], False, 0
    )


def _explicit_closure(
    algebra: FiniteAlgebra,
    arity: int,
    seeds: list[tuple[np.ndarray, Recipe]],
    cap: int,
    depth_cap: int | None = None,
) -> ClosureResult:
    size = algebra.size
    wid = size**arity
    rows: list[np.ndarray] = []
    index: dict[bytes, int] = {}
    recipes: list[Recipe] = []
    capped = False

    # candidate batches are screened against the known rows with sorted
    # fixed-width comparisons, so the python-level add only ever sees rows
    # that are new (or duplicated within one batch)
    void = np.dtype((np.void, wid))
    sorted_keys = np.empty(0, dtype=void)
    fresh: list[bytes] = []
    fresh_sorted = np.empty(0, dtype=void)
    fresh_dirty = False

    def add(row: np.ndarray, recipe: Recipe) -> None:
        nonlocal capped, fresh_dirty
        if capped:
            return
        key = row.tobytes()
        if key in index:
            return
        if len(rows) >= cap:
            capped = True
            return
        index[key] = len(rows)
        rows.append(np.array(row, dtype=np.uint8))
        recipes.append(recipe)
        fresh.append(key)
        fresh_dirty = True

    def new_offsets(batch: np.ndarray) -> np.ndarray:
        """Ascending offsets of batch rows not yet in the closure."""
        nonlocal sorted_keys, fresh, fresh_sorted, fresh_dirty
        if len(fresh) > max(256, len(rows) // 8):
            stacked = np.ascontiguousarray(np.stack(rows))
            sorted_keys = np.sort(stacked.view(void).ravel())
            fresh = []
            fresh_sorted = np.empty(0, dtype=void)
            fresh_dirty = False
        elif fresh_dirty:
            fresh_sorted = np.sort(np.frombuffer(b"".join(fresh), dtype=void))
            fresh_dirty = False
        keys = np.ascontiguousarray(batch).view(void).ravel()
        known = np.zeros(len(keys), dtype=bool)
        for ref in (sorted_keys, fresh_sorted):
            if len(ref):
                pos = np.minimum(np.searchsorted(ref, keys), len(ref) - 1)
                known |= ref[pos] == keys
        return np.nonzero(~known)[0]

    for row, recipe in seeds:
        add(row, recipe)
    for op in algebra.operations:
        if op.arity == 0:
            add(np.full(wid, op.table[0], dtype=np.uint8), ("nullary", op.name))

    if not rows:
        return _empty_result(algebra, arity, "bfs")

    ops = [
        (op.name, op.arity, algebra.op_array(op.name))
        for op in algebra.operations
        if op.arity >= 1
    ]
    round_lo = 0
    depth = 0
    while round_lo < len(rows) and not capped:
        if depth_cap is not None and depth >= depth_cap:
            capped = True
            break
        depth += 1
        hi = len(rows)
        stack = np.stack(rows[:hi])
        for name, k, tab in ops:
            if capped:
                break
            if k == 1:
                batch = tab[stack[round_lo:hi]]
                for off in new_offsets(batch):
                    add(batch[off], ("op", name, (round_lo + int(off),)))
                    if capped:
                        break
            elif k == 2:
                # old prefixes meet new last operands; new prefixes meet all
                for plo, phi, llo in ((0, round_lo, round_lo), (round_lo, hi, 0)):
                    if capped or plo >= phi or llo >= hi:
                        continue
                    lasts = stack[llo:hi]
                    width = hi - llo
                    block = max(1, 4_000_000 // (width * wid))
                    for b0 in range(plo, phi, block):
                        if capped:
                            break
                        b1 = min(b0 + block, phi)
                        # size <= 255 keeps pre*size + last below 2**16
                        pre = stack[b0:b1, None, :].astype(np.uint16) * size
                        batch = tab[(pre + lasts[None, :, :]).reshape(-1, wid)]
                        for off in new_offsets(batch):
                            off = int(off)
                            recipe = ("op", name, (b0 + off // width, llo + off % width))
                            add(batch[off], recipe)
                            if capped:
                                break
            else:
                for prefix in itertools.product(range(hi), repeat=k - 1):
                    if capped:
                        break
                    pref_idx = rows[prefix[0]].astype(np.int64)
                    for j in prefix[1:]:
                        pref_idx = pref_idx * size + rows[j]
                    if any(p >= round_lo for p in prefix):
                        lo_last = 0
                    else:
                        lo_last = round_lo
                    batch = tab[pref_idx[None, :] * size + stack[lo_last:hi]]
                    for off in new_offsets(batch):
                        add(batch[off], ("op", name, prefix + (lo_last + int(off),)))
                        if capped:
                            break
        round_lo = hi

    tables = np.stack(rows)
    return ClosureResult(
        algebra, arity, "bfs", tables, index, recipes, capped, None if capped else len(rows)
    )


def _span_closure_core(
    algebra: FiniteAlgebra,
    arity: int,
    seeds: list[tuple[np.ndarray, Recipe]],
    span: SpanStructure,
    in_span,
    note_generator,
):
    """Shared generator discovery: returns (core_rows, core_recipes, gens)."""
    size = algebra.size
    wid = size**arity
    core_rows: list[np.ndarray] = []
    core_recipes: list[Recipe] = []
    core_index: dict[bytes, int] = {}
    gens: list[int] = []
    new_gens: list[int] = []

    def register(row: np.ndarray, recipe: Recipe) -> int:
        key = row.tobytes()
        if key in core_index:
            return core_index[key]
        cid = len(core_rows)
        core_index[key] = cid
        core_rows.append(np.array(row, dtype=np.uint8))
        core_recipes.append(recipe)
        if not in_span(row):
            note_generator(row)
            gens.append(cid)
            new_gens.append(cid)
        return cid

    for row, recipe in seeds:
        register(row, recipe)
    for op in algebra.operations:
        if op.arity == 0:
            register(np.full(wid, op.table[0], dtype=np.uint8), ("nullary", op.name))

    ops = [
        (op.name, op.arity, algebra.op_array(op.name))
        for op in algebra.operations
        if op.arity >= 1 and op.name != span.plus_name
    ]
    while new_gens:
        frontier = set(new_gens)
        new_gens = []
        known = list(gens)
        for name, k, tab in ops:
            for combo in itertools.product(known, repeat=k):
                if not any(g in frontier for g in combo):
                    continue
                idx = core_rows[combo[0]].astype(np.int64)
                for g in combo[1:]:
                    idx = idx * size + core_rows[g]
                register(tab[idx].astype(np.uint8), ("op", name, combo))
    return core_rows, core_recipes, gens


def _span_closure_prime(
    algebra: FiniteAlgebra,
    arity: int,
    seeds: list[tuple[np.ndarray, Recipe]],
    cap: int,
    span: SpanStructure,
) -> ClosureResult:
    size = algebra.size
    wid = size**arity
    p = span.exponent
    plus_flat = span.plus.reshape(-1)

    # coordinates of (A, plus) as an F_p vector space, for membership tests
    basis_elems: list[int] = []
    reach: dict[int, tuple[int, ...]] = {span.zero: ()}
    for a in range(size):
        if a in reach:
            continue
        basis_elems.append(a)
        extended = {}
        for elt, coord in list(reach.items()):
            x = elt
            reach[elt] = coord + (0,)
            for mult in range(1, p):
                x = span.plus[x, a]
                extended[x] = coord + (mult,)
        reach.update(extended)
    dim = len(basis_elems)
    coord_table = np.zeros((size, dim), dtype=np.int64)
    for elt, coord in reach.items():
        coord_table[elt] = coord

    pivots: list[int] = []
    echelon: list[np.ndarray] = []

    def reduce_vec(vec: np.ndarray) -> np.ndarray:
        v = vec % p
        for piv, erow in zip(pivots, echelon):
            c = v[piv]
            if c:
                v = (v - c * erow) % p
        return v

    def in_span(row: np.ndarray) -> bool:
        return not reduce_vec(coord_table[row].reshape(-1)).any()

    def note_generator(row: np.ndarray) -> None:
        v = reduce_vec(coord_table[row].reshape(-1))
        piv = int(np.nonzero(v)[0][0])
        inv = pow(int(v[piv]), -1, p)
        pivots.append(piv)
        echelon.append((v * inv) % p)

    core_rows, core_recipes, gens = _span_closure_core(
        algebra, arity, seeds, span, in_span, note_generator
    )
    if not core_rows:
        return _empty_result(algebra, arity, "span")

    exact = p ** len(gens)
    limit = min(exact, cap)
    tables = np.empty((limit, wid), dtype=np.uint8)
    tables[0] = np.full(wid, span.zero, dtype=np.uint8)
    recipes: list[Recipe] = [("lincomb", ())]
    n_have = 1
    for gid in gens:
        if n_have >= limit:
            break
        base = core_rows[gid]
        n_base = n_have
        mult_row = base
        for mult in range(1, p):
            room = limit - n_have
            if room <= 0:
                break
            take = min(n_base, room)
            block = plus_flat[tables[:take].astype(np.int64) * size + mult_row]
            tables[n_have : n_have + take] = block.astype(np.uint8)
            for i in range(take):
                recipes.append(("lincomb", recipes[i][1] + ((gid, mult),)))
            n_have += take
            if mult + 1 < p:
                mult_row = plus_flat[mult_row.astype(np.int64) * size + base]

    tables = tables[:n_have]
    index = {tables[i].tobytes(): i for i in range(n_have)}
    # prefer direct recipes for rows that coincide with core functions
    for cid, row in enumerate(core_rows):
        fid = index.get(row.tobytes())
        if fid is not None:
            recipes[fid] = ("core", cid)

    return ClosureResult(
        algebra,
        arity,
        "span",
        tables,
        index,
        recipes,
        exact > cap,
        exact,
        span,
        np.stack([core_rows[g] for g in gens]) if gens else np.empty((0, wid), dtype=np.uint8),
        core_recipes,
        gens,
    )


def _span_closure_general(
    algebra: FiniteAlgebra,
    arity: int,
    seeds: list[tuple[np.ndarray, Recipe]],
    cap: int,
    span: SpanStructure,
) -> ClosureResult:
    """Span closure for non-prime exponents: the subgroup stays materialized."""
    size = algebra.size
    wid = size**arity
    plus_flat = span.plus.reshape(-1)

    rows: list[np.ndarray] = []
    index: dict[bytes, int] = {}
    recipes: list[Recipe] = []
    members: dict[bytes, None] = {}
    capped = False

    def register(row: np.ndarray, recipe: Recipe) -> int:
        key = row.tobytes()
        if key in index:
            return index[key]
        fid = len(rows)
        index[key] = fid
        rows.append(np.array(row, dtype=np.uint8))
        recipes.append(recipe)
        return fid

    def in_span(row: np.ndarray) -> bool:
        return row.tobytes() in members

    gen_rows: list[np.ndarray] = []

    def extend(row: np.ndarray, fid: int) -> None:
        """Grow the subgroup by a new generator (cosets of its multiples)."""
        nonlocal capped
        gen_rows.append(rows[fid])
        multiples = [fid]
        x = rows[fid]
        while True:
            x = plus_flat[x.astype(np.int64) * size + rows[fid]].astype(np.uint8)
            key = x.tobytes()
            if key in members or key == rows[fid].tobytes():
                break
            multiples.append(register(x, ("op", span.plus_name, (multiples[-1], fid))))
        snapshot = [index[key] for key in members]
        for mid in multiples:
            mrow = rows[mid]
            members[mrow.tobytes()] = None
            for sid in snapshot:
                out = plus_flat[mrow.astype(np.int64) * size + rows[sid]].astype(np.uint8)
                members[out.tobytes()] = None
                register(out, ("op", span.plus_name, (mid, sid)))
                if len(members) > cap:
                    capped = True
                    return

    def note(row: np.ndarray, recipe: Recipe) -> None:
        if capped:
            return
        if in_span(row):
            register(row, recipe)
        else:
            extend(row, register(row, recipe))

    gens_pending: list[tuple[np.ndarray, Recipe]] = list(seeds)
    for op in algebra.operations:
        if op.arity == 0:
            gens_pending.append((np.full(wid, op.table[0], dtype=np.uint8), ("nullary", op.name)))
    for row, recipe in gens_pending:
        note(row, recipe)

    if not rows:
        return _empty_result(algebra, arity, "span")

    ops = [
        (op.name, op.arity, algebra.op_array(op.name))
        for op in algebra.operations
        if op.arity >= 1 and op.name != span.plus_name
    ]
    done = 0
    while done < len(gen_rows) and not capped:
        known = len(gen_rows)
        gen_ids = [index[g.tobytes()] for g in gen_rows[:known]]
        for name, k, tab in ops:
            if capped:
                break
            for combo in itertools.product(range(known), repeat=k):
                if all(c < done for c in combo):
                    continue
                idx = rows[gen_ids[combo[0]]].astype(np.int64)
                for c in combo[1:]:
                    idx = idx * size + rows[gen_ids[c]]
                note(tab[idx].astype(np.uint8), ("op", name, tuple(gen_ids[c] for c in combo)))
                if capped:
                    break
        done = known

    tables = np.stack(rows)
    return ClosureResult(
        algebra,
        arity,
        "span",
        tables,
        index,
        recipes,
        capped,
        None if capped else len(rows),
        span,
        np.stack(gen_rows) if gen_rows else np.empty((0, wid), dtype=np.uint8),
    )


def _close(
    algebra: FiniteAlgebra,
    arity: int,
    with_constants: bool,
    cap: int,
    strategy: str,
    depth_cap: int | None,
) -> ClosureResult:
    if arity < 0:
        raise ValueError("arity must be >= 0")
    if strategy not in ("auto", "span", "bfs"):
        raise ValueError(f"unknown strategy {strategy!r}")
    # closures are pure functions of the operation tables, so they are safe
    # to memoize as long as algebras are never mutated after construction
    cache = algebra.__dict__.setdefault("_closure_cache", {})
    key = (arity, with_constants, cap, strategy, depth_cap)
    hit = cache.get(key)
    if hit is not None:
        return hit
    seeds = _seed_rows(algebra, arity, with_constants)
    if strategy != "bfs" and depth_cap is None:
        span = additive_structure(algebra)
        if span is not None:
            result = (
                _span_closure_prime(algebra, arity, seeds, cap, span)
                if span.prime
                else _span_closure_general(algebra, arity, seeds, cap, span)
            )
            cache[key] = result
            return result
        if strategy == "span":
            raise ValueError("no abelian group operation with a multilinear signature")
    elif strategy == "span":
        raise ValueError("the span strategy does not track composition depth")
    result = _explicit_closure(algebra, arity, seeds, cap, depth_cap)
    cache[key] = result
    return result


def term_functions(
    algebra: FiniteAlgebra,
    arity: int,
    cap: int = DEFAULT_CAP,
    strategy: str = "auto",
    depth_cap: int | None = None,
) -> ClosureResult:
    """Closure of the projections under the fundamental operations.

    For arity 0 only constants derivable from nullary symbols appear.
    A depth_cap bounds composition depth and forces the explicit
    breadth-first strategy, since the span shortcut loses depths.
    """
    return _close(algebra, arity, with_constants=False, cap=cap, strategy=strategy, depth_cap=depth_cap)


def polynomial_functions(
    algebra: FiniteAlgebra,
    arity: int,
    cap: int = DEFAULT_CAP,
    strategy: str = "auto",
    depth_cap: int | None = None,
) -> ClosureResult:
    """Like term_functions but with every constant admitted as a seed."""
    return _close(algebra, arity, with_constants=True, cap=cap, strategy=strategy, depth_cap=depth_cap)


@dataclass(frozen=True)
class SpectrumCount:
    arity: int
    count: int
    exact: bool


def free_spectrum(
    algebra: FiniteAlgebra, arity: int, cap: int = DEFAULT_CAP
) -> SpectrumCount:
    """|Clo_n(A)|; when capped without span structure the count is a lower bound."""
    closure = term_functions(algebra, arity, cap=cap)
    return SpectrumCount(arity, closure.count, closure.exact)
