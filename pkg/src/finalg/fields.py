"""Small finite fields as explicit operation tables.

Elements are labelled 0..q-1.  A label is read as the base-p digit
vector of the element over the prime subfield, so addition is always
digit-wise modulo p, 0 is the additive identity, and 1 is the
multiplicative identity.  Prime fields use plain modular arithmetic;
the orders 4, 8 and 9 are built from fixed irreducible polynomials.
Every constructed field re-verifies the full set of field axioms
exhaustively on its finished tables.
"""
from __future__ import annotations

import numpy as np

# lower coefficients c_0..c_{e-1} of a monic irreducible, read as t^e = -(c_0 + c_1 t + ...)
_REDUCTIONS = {
    4: (2, (1, 1)),   # x^2 + x + 1 over F2
    8: (2, (1, 1, 0)),  # x^3 + x + 1 over F2
    9: (3, (1, 0)),   # x^2 + 1 over F3
}


def _is_prime(n: int) -> bool:
    return n >= 2 and all(n % k for k in range(2, int(n**0.5) + 1))


class FiniteField:
    """GF(q) given by full addition and multiplication tables."""

    def __init__(self, order: int, characteristic: int, add: np.ndarray, mul: np.ndarray):
        self.order = order
        self.characteristic = characteristic
        self.degree = 1
        while characteristic**self.degree < order:
            self.degree += 1
        self.add_table = np.asarray(add, dtype=np.int64)
        self.mul_table = np.asarray(mul, dtype=np.int64)
        self._verify_axioms()
        self.neg_table = np.array(
            [int(np.nonzero(self.add_table[a] == 0)[0][0]) for a in range(order)],
            dtype=np.int64,
        )
        inv = np.zeros(order, dtype=np.int64)
        for a in range(1, order):
            inv[a] = int(np.nonzero(self.mul_table[a] == 1)[0][0])
        self.inv_table = inv
        self._hash = hash((order, self.add_table.tobytes(), self.mul_table.tobytes()))

    def _verify_axioms(self) -> None:
        q = self.order
        if q < 2:
            raise ValueError("a field needs at least the two identities")
        idx = np.arange(q, dtype=np.int64)
        for label, tab in (("addition", self.add_table), ("multiplication", self.mul_table)):
            if tab.shape != (q, q) or tab.min() < 0 or tab.max() >= q:
                raise ValueError(f"{label} table is not a {q}x{q} table over 0..{q - 1}")
            if not np.array_equal(tab, tab.T):
                raise ValueError(f"{label} is not commutative")
            left = tab[tab.reshape(-1), :].reshape(q, q, q)
            right = tab[:, tab.reshape(-1)].reshape(q, q, q)
            if not np.array_equal(left, right):
                raise ValueError(f"{label} is not associative")
        if not np.array_equal(self.add_table[0], idx):
            raise ValueError("0 is not the additive identity")
        if not np.array_equal(self.mul_table[1], idx):
            raise ValueError("1 is not the multiplicative identity")
        if not all(0 in self.add_table[a] for a in range(q)):
            raise ValueError("some element has no additive inverse")
        if not all(1 in self.mul_table[a] for a in range(1, q)):
            raise ValueError("some nonzero element has no multiplicative inverse")
        lhs = self.mul_table[:, self.add_table.reshape(-1)].reshape(q, q, q)
        ab = self.mul_table[idx[:, None, None], idx[None, :, None]]
        ac = self.mul_table[idx[:, None, None], idx[None, None, :]]
        if not np.array_equal(lhs, self.add_table[ab, ac]):
            raise ValueError("distributivity fails")

    # -- element arithmetic ------------------------------------------------

    def plus(self, a: int, b: int) -> int:
        return int(self.add_table[a, b])

    def times(self, a: int, b: int) -> int:
        return int(self.mul_table[a, b])

    def negate(self, a: int) -> int:
        return int(self.neg_table[a])

    def minus(self, a: int, b: int) -> int:
        return int(self.add_table[a, self.neg_table[b]])

    def invert(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("0 has no multiplicative inverse")
        return int(self.inv_table[a])

    def power(self, a: int, e: int) -> int:
        if e < 0:
            return self.power(self.invert(a), -e)
        out = 1
        base = a
        while e:
            if e & 1:
                out = self.times(out, base)
            base = self.times(base, base)
            e >>= 1
        return out

    def scalar(self, n: int) -> int:
        """The image of the integer n in the prime subfield."""
        return n % self.characteristic

    def elements(self) -> range:
        return range(self.order)

    def coordinates(self, labels: np.ndarray) -> np.ndarray:
        """Base-p digits of labels: the prime-subfield coordinates."""
        arr = np.asarray(labels, dtype=np.int64)
        out = np.empty(arr.shape + (self.degree,), dtype=np.int64)
        rest = arr
        for i in range(self.degree):
            out[..., i] = rest % self.characteristic
            rest = rest // self.characteristic
        return out

    def power_array(self, arr: np.ndarray, e: int) -> np.ndarray:
        out = np.ones_like(arr)
        base = arr
        while e:
            if e & 1:
                out = self.mul_table[out, base]
            base = self.mul_table[base, base]
            e >>= 1
        return out

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, FiniteField)
            and self.order == other.order
            and np.array_equal(self.add_table, other.add_table)
            and np.array_equal(self.mul_table, other.mul_table)
        )

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"FiniteField(order={self.order}, characteristic={self.characteristic})"


def _prime_tables(p: int) -> tuple[np.ndarray, np.ndarray]:
    idx = np.arange(p, dtype=np.int64)
    return (idx[:, None] + idx[None, :]) % p, (idx[:, None] * idx[None, :]) % p


def _extension_tables(p: int, low: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    e = len(low)
    q = p**e

    def digits(a: int) -> list[int]:
        return [(a // p**i) % p for i in range(e)]

    def label(coeffs: list[int]) -> int:
        return sum(c * p**i for i, c in enumerate(coeffs))

    def reduce(coeffs: list[int]) -> list[int]:
        out = list(coeffs) + [0] * (2 * e - 1 - len(coeffs))
        for d in range(2 * e - 2, e - 1, -1):
            c = out[d] % p
            if c:
                out[d] = 0
                for j, lo in enumerate(low):
                    out[d - e + j] = (out[d - e + j] - c * lo) % p
        return [c % p for c in out[:e]]

    add = np.zeros((q, q), dtype=np.int64)
    mul = np.zeros((q, q), dtype=np.int64)
    for a in range(q):
        da = digits(a)
        for b in range(q):
            db = digits(b)
            add[a, b] = label([(x + y) % p for x, y in zip(da, db)])
            prod = [0] * (2 * e - 1)
            for i, x in enumerate(da):
                for j, y in enumerate(db):
                    prod[i + j] = (prod[i + j] + x * y) % p
            mul[a, b] = label(reduce(prod))
    return add, mul


_CACHE: dict[int, FiniteField] = {}


def finite_field(order: int) -> FiniteField:
    """GF(order) for a prime order or one of the orders 4, 8, 9."""
    if order in _CACHE:
        return _CACHE[order]
    if _is_prime(order):
        add, mul = _prime_tables(order)
        fld = FiniteField(order, order, add, mul)
    elif order in _REDUCTIONS:
        p, low = _REDUCTIONS[order]
        add, mul = _extension_tables(p, low)
        fld = FiniteField(order, p, add, mul)
    else:
        raise ValueError(
            f"unsupported field order {order}; primes and the orders 4, 8, 9 are available"
        )
    _CACHE[order] = fld
    return fld
