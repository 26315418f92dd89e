"""Exact arithmetic in GF(p^k) with the Frobenius power x -> x^(p^m).

Elements are addressed by a canonical index: the base-p evaluation of their
little-endian coefficient vector modulo the canonical irreducible modulus.
Scalar operations work on these integer indices; the ``v*`` methods are the
numpy-vectorized counterparts used by the counting engine and the scans.

Three arithmetic back ends coexist behind the same surface:

* prime fields (k = 1): residues mod p, no polynomial layer;
* table fields (q <= TABLE_LIMIT): discrete log / antilog tables built from
  the least generator, plus a cached Frobenius table;
* large extension fields: schoolbook polynomial arithmetic on digit vectors.
"""

from __future__ import annotations

import functools
import threading
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from sympy import factorint, isprime

from . import polynomial as P
from .errors import (
    CharTwo,
    DegreeTooLarge,
    DivisionByZero,
    InvalidFrobPower,
    MixedContext,
    NotPrime,
    PreconditionError,
)

TABLE_LIMIT = 1 << 22
SQUARE_TABLE_LIMIT = 1 << 20
Q_LIMIT = 1 << 63
_INT64_MUL_SAFE = 3037000499  # floor(sqrt(2^63 - 1))
_CHUNK = 1 << 18


def canonical_modulus(p: int, k: int) -> tuple[int, ...]:
    """Least monic irreducible of degree k, ordering c_0..c_{k-1} as a base-p integer."""
    if k == 1:
        return (0, 1)
    for n in range(p ** k):
        coeffs = []
        t = n
        for _ in range(k):
            coeffs.append(t % p)
            t //= p
        f = coeffs + [1]
        if coeffs[0] != 0 and P.is_irreducible(f, p):
            return tuple(f)
    raise AssertionError(f"no irreducible polynomial of degree {k} over F_{p}")


@dataclass(frozen=True)
class FieldCtx:
    p: int
    k: int
    m: int
    modulus: tuple[int, ...]
    q: int = field(init=False)
    _cache: dict = field(default_factory=dict, compare=False, repr=False)
    _lock: threading.RLock = field(default_factory=threading.RLock, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "q", self.p ** self.k)

    # ------------------------------------------------------------------ basics
    @property
    def is_prime_field(self) -> bool:
        return self.k == 1

    @property
    def has_tables(self) -> bool:
        return self.q <= TABLE_LIMIT

    @property
    def dtype(self):
        if self.k == 1:
            return np.int64 if self.p <= _INT64_MUL_SAFE else object
        return np.int64 if self.p < (1 << 20) else object

    def __str__(self) -> str:
        return f"GF({self.p}^{self.k}), sigma = x^({self.p}^{self.m})"

    def elem(self, index: int) -> "GFElem":
        index = int(index)
        if not 0 <= index < self.q:
            raise PreconditionError(f"index {index} outside [0, {self.q})")
        return GFElem(self, index)

    def __call__(self, value: int) -> "GFElem":
        """Image of an integer in the prime subfield."""
        return GFElem(self, int(value) % self.p)

    def from_coeffs(self, coeffs: Sequence[int]) -> "GFElem":
        if len(coeffs) > self.k:
            raise PreconditionError(f"expected at most {self.k} coefficients")
        return GFElem(self, self.from_digits(coeffs))

    def digits(self, a: int) -> list[int]:
        out = []
        for _ in range(self.k):
            out.append(a % self.p)
            a //= self.p
        return out

    def from_digits(self, ds: Sequence[int]) -> int:
        acc = 0
        for c in reversed(list(ds)):
            acc = acc * self.p + (c % self.p)
        return acc

    def index_of(self, a) -> int:
        if isinstance(a, GFElem):
            if a.ctx != self:
                raise MixedContext(f"element of {a.ctx} used in {self}")
            return a.index
        a = int(a)
        if not 0 <= a < self.q:
            raise PreconditionError(f"index {a} outside [0, {self.q})")
        return a

    # ------------------------------------------------------------- scalar ops
    def add(self, a: int, b: int) -> int:
        p = self.p
        if self.k == 1:
            return (a + b) % p
        if p == 2:
            return a ^ b
        out, scale = 0, 1
        while a or b:
            out += ((a % p + b % p) % p) * scale
            a //= p
            b //= p
            scale *= p
        return out

    def neg(self, a: int) -> int:
        p = self.p
        if self.k == 1:
            return (-a) % p
        if p == 2:
            return a
        out, scale = 0, 1
        while a:
            out += ((-(a % p)) % p) * scale
            a //= p
            scale *= p
        return out

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg(b))

    def mul(self, a: int, b: int) -> int:
        if self.k == 1:
            return a * b % self.p
        if a == 0 or b == 0:
            return 0
        tables = self._cache.get("tables")
        if tables is not None:
            exp, log = tables
            return int(exp[(int(log[a]) + int(log[b])) % (self.q - 1)])
        return self.from_digits(self._mulmod_digits(self.digits(a), self.digits(b)))

    def _mulmod_digits(self, da: list[int], db: list[int]) -> list[int]:
        p, k, f = self.p, self.k, self.modulus
        prod = [0] * (2 * k - 1)
        for i, x in enumerate(da):
            if x:
                for j, y in enumerate(db):
                    prod[i + j] += x * y
        for d in range(2 * k - 2, k - 1, -1):
            c = prod[d] % p
            if c:
                for j in range(k):
                    prod[d - k + j] -= c * f[j]
            prod[d] = 0
        return [c % p for c in prod[:k]]

    def pow(self, a: int, n: int) -> int:
        """Square-and-multiply; negative exponents go through the inverse."""
        if n < 0:
            return self.pow(self.inv(a), -n)
        if self.k == 1:
            return pow(a, n, self.p)
        result, base = 1, a
        while n:
            if n & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            n >>= 1
        return result

    def inv(self, a: int) -> int:
        if a == 0:
            raise DivisionByZero("inverse of 0")
        if self.k == 1:
            return pow(a, self.p - 2, self.p)
        tables = self._cache.get("tables")
        if tables is not None:
            exp, log = tables
            return int(exp[(-int(log[a])) % (self.q - 1)])
        return self.pow(a, self.q - 2)

    def frob(self, a: int, times: int = 1) -> int:
        """sigma^times(a) = a^(p^(m*times)), applied as a linear map on coefficients."""
        if self.k == 1 or times == 0:
            return a
        mat = self._frob_matrix(times)
        ds = self.digits(a)
        p = self.p
        out = [sum(ds[i] * mat[i][j] for i in range(self.k)) % p for j in range(self.k)]
        return self.from_digits(out)

    def _frob_matrix(self, times: int) -> list[list[int]]:
        key = ("frob_matrix", times)
        mat = self._cache.get(key)
        if mat is None:
            p, k = self.p, self.k
            f = list(self.modulus)
            # row i: coefficients of (x^i)^(p^(m*times)) = (x^(p^(m*times)))^i mod f
            xp = P.x_pow_p_iter(f, p, self.m * times % k)
            rows, cur = [], [1]
            for _ in range(k):
                rows.append((cur + [0] * k)[:k])
                cur = P.mod(P.mul(cur, xp, p), f, p)
            mat = rows
            self._cache[key] = mat
        return mat

    # ------------------------------------------------------------ structure
    def generator(self) -> int:
        g = self._cache.get("generator")
        if g is None:
            g = _least_generator(self)
            self._cache["generator"] = g
        return g

    def is_square(self, a: int) -> bool:
        if a == 0 or self.p == 2:
            return True
        if self.k == 1:
            return pow(a, (self.p - 1) // 2, self.p) == 1
        if self.q <= SQUARE_TABLE_LIMIT:
            return bool(self.square_table()[a])
        return self.pow(a, (self.q - 1) // 2) == 1

    def is_cube(self, a: int) -> bool:
        if a == 0 or (self.q - 1) % 3:
            return True
        if self.q <= SQUARE_TABLE_LIMIT:
            return bool(self.cube_table()[a])
        return self.pow(a, (self.q - 1) // 3) == 1

    # ------------------------------------------------------- table builders
    def tables(self) -> tuple[np.ndarray, np.ndarray]:
        """(exp, log) tables for the least generator; exp has length q - 1."""
        t = self._cache.get("tables")
        if t is not None:
            return t
        if not self.has_tables:
            raise PreconditionError(f"q = {self.q} exceeds the table limit {TABLE_LIMIT}")
        with self._lock:
            t = self._cache.get("tables")
            if t is None:
                t = _build_tables(self)
                self._cache["tables"] = t
        return t

    def square_table(self) -> np.ndarray:
        t = self._cache.get("squares")
        if t is None:
            with self._lock:
                t = self._cache.get("squares")
                if t is None:
                    allx = np.arange(self.q, dtype=self.dtype)
                    t = np.zeros(self.q, dtype=bool)
                    t[self.vmul(allx, allx).astype(np.int64)] = True
                    self._cache["squares"] = t
        return t

    def cube_table(self) -> np.ndarray:
        t = self._cache.get("cubes")
        if t is None:
            with self._lock:
                t = self._cache.get("cubes")
                if t is None:
                    allx = np.arange(self.q, dtype=self.dtype)
                    t = np.zeros(self.q, dtype=bool)
                    t[self.vmul(self.vmul(allx, allx), allx).astype(np.int64)] = True
                    self._cache["cubes"] = t
        return t

    def frob_table(self, times: int = 1) -> np.ndarray:
        key = ("frob_table", times)
        t = self._cache.get(key)
        if t is None:
            with self._lock:
                t = self._cache.get(key)
                if t is None:
                    t = np.empty(self.q, dtype=np.int64)
                    for s in range(0, self.q, _CHUNK):
                        block = np.arange(s, min(s + _CHUNK, self.q), dtype=np.int64)
                        t[s:s + len(block)] = self._vfrob_linear(block, times)
                    self._cache[key] = t
        return t

    # --------------------------------------------------------- vector ops
    def asarray(self, a) -> np.ndarray:
        return np.asarray(a, dtype=self.dtype)

    def _vdigits(self, a: np.ndarray) -> list[np.ndarray]:
        p = self.p
        out = []
        for _ in range(self.k):
            out.append(a % p)
            a = a // p
        return out

    def _vfrom_digits(self, ds: list[np.ndarray]) -> np.ndarray:
        acc = ds[-1]
        for d in reversed(ds[:-1]):
            acc = acc * self.p + d
        return acc

    def vadd(self, a, b) -> np.ndarray:
        p = self.p
        if self.k == 1:
            return (a + b) % p
        if p == 2:
            return np.bitwise_xor(a, b)
        da, db = self._vdigits(a), self._vdigits(b)
        return self._vfrom_digits([(x + y) % p for x, y in zip(da, db)])

    def vneg(self, a) -> np.ndarray:
        p = self.p
        if self.k == 1:
            return (-a) % p
        if p == 2:
            return a
        return self._vfrom_digits([(-x) % p for x in self._vdigits(a)])

    def vsub(self, a, b) -> np.ndarray:
        return self.vadd(a, self.vneg(b))

    def vmul(self, a, b) -> np.ndarray:
        if self.k == 1:
            return (a * b) % self.p
        if self.has_tables:
            exp, log = self.tables()
            a = np.asarray(a, dtype=np.int64)
            b = np.asarray(b, dtype=np.int64)
            zero = (a == 0) | (b == 0)
            r = exp[(log[a] + log[b]) % (self.q - 1)]
            return np.where(zero, 0, r)
        return self._vmul_digits(a, b)

    def _vmul_digits(self, a, b) -> np.ndarray:
        p, k, f = self.p, self.k, self.modulus
        da, db = self._vdigits(a), self._vdigits(b)
        prod = [0] * (2 * k - 1)
        for i in range(k):
            for j in range(k):
                prod[i + j] = prod[i + j] + da[i] * db[j]
        prod = [c % p for c in prod]
        for d in range(2 * k - 2, k - 1, -1):
            c = prod[d]
            for j in range(k):
                if f[j]:
                    prod[d - k + j] = (prod[d - k + j] - c * f[j]) % p
        return self._vfrom_digits(prod[:k])

    def vpow(self, a, n: int) -> np.ndarray:
        """Elementwise a^n for n >= 0 (0^0 = 1)."""
        if n < 0:
            return self.vpow(self.vinv(a), -n)
        a = np.asarray(a, dtype=self.dtype)
        if n == 0:
            return np.ones_like(a)
        if self.has_tables:
            exp, log = self.tables()
            ai = a.astype(np.int64)
            e = n % (self.q - 1)
            r = exp[(log[ai] * e) % (self.q - 1)]
            return np.where(ai == 0, 0, r).astype(self.dtype)
        result = np.ones_like(a)
        base = a
        while n:
            if n & 1:
                result = self.vmul(result, base)
            n >>= 1
            if n:
                base = self.vmul(base, base)
        return result

    def vinv(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=self.dtype)
        if np.any(a == 0):
            raise DivisionByZero("inverse of 0")
        return self.vpow(a, self.q - 2)

    def vpow_p_power(self, a, e: int) -> np.ndarray:
        """Elementwise a^(p^e), reducing the exponent modulo q - 1 lazily."""
        a = np.asarray(a, dtype=self.dtype)
        if self.q == 2:
            return a
        n = pow(self.p, e, self.q - 1)
        if n == 0:
            n = self.q - 1
        return self.vpow(a, n)

    def vfrob(self, a, times: int = 1) -> np.ndarray:
        if self.k == 1 or times == 0:
            return a
        if self.has_tables:
            return self.frob_table(times)[np.asarray(a, dtype=np.int64)]
        return self._vfrob_linear(a, times)

    def _vfrob_linear(self, a, times: int) -> np.ndarray:
        mat = self._frob_matrix(times)
        ds = self._vdigits(np.asarray(a, dtype=self.dtype))
        p, k = self.p, self.k
        out = []
        for j in range(k):
            acc = np.zeros_like(ds[0])
            for i in range(k):
                if mat[i][j]:
                    acc = acc + ds[i] * mat[i][j]
            out.append(acc % p)
        return self._vfrom_digits(out)

    def vis_square(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=self.dtype)
        if self.p == 2:
            return np.ones(a.shape, dtype=bool)
        if self.k > 1 and self.q <= SQUARE_TABLE_LIMIT:
            return self.square_table()[a.astype(np.int64)]
        return (a == 0) | (self.vpow(a, (self.q - 1) // 2) == 1)

    def vis_cube(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=self.dtype)
        if (self.q - 1) % 3:
            return np.ones(a.shape, dtype=bool)
        if self.q <= SQUARE_TABLE_LIMIT:
            return self.cube_table()[a.astype(np.int64)]
        return (a == 0) | (self.vpow(a, (self.q - 1) // 3) == 1)


@dataclass(frozen=True)
class GFElem:
    ctx: FieldCtx
    index: int

    @property
    def coeffs(self) -> tuple[int, ...]:
        return tuple(self.ctx.digits(self.index))

    def _other(self, other) -> int:
        if isinstance(other, GFElem):
            if other.ctx != self.ctx:
                raise MixedContext(f"{other.ctx} vs {self.ctx}")
            return other.index
        if isinstance(other, int):
            return other % self.ctx.p
        return NotImplemented

    def __add__(self, other):
        return GFElem(self.ctx, self.ctx.add(self.index, self._other(other)))

    __radd__ = __add__

    def __sub__(self, other):
        return GFElem(self.ctx, self.ctx.sub(self.index, self._other(other)))

    def __rsub__(self, other):
        return GFElem(self.ctx, self.ctx.sub(self._other(other), self.index))

    def __mul__(self, other):
        return GFElem(self.ctx, self.ctx.mul(self.index, self._other(other)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GFElem(self.ctx, self.ctx.mul(self.index, self.ctx.inv(self._other(other))))

    def __neg__(self):
        return GFElem(self.ctx, self.ctx.neg(self.index))

    def __pow__(self, n: int):
        return GFElem(self.ctx, self.ctx.pow(self.index, n))

    def __int__(self) -> int:
        return self.index

    def __repr__(self) -> str:
        return f"GFElem({self.index} in GF({self.ctx.p}^{self.ctx.k}))"


def make_field(p: int, k: int = 1, m: int = 1) -> FieldCtx:
    """Construct GF(p^k) with sigma = Frob_{p^m}; equal arguments give the same object."""
    return _make_field(int(p), int(k), int(m))


@functools.lru_cache(maxsize=None)
def _make_field(p: int, k: int, m: int) -> FieldCtx:
    if p < 2 or not isprime(p):
        raise NotPrime(f"{p} is not prime")
    if k < 1:
        raise PreconditionError(f"extension degree must be >= 1, got {k}")
    if m < 0:
        raise InvalidFrobPower(f"Frobenius power must be >= 0, got {m}")
    if p ** k >= Q_LIMIT:
        raise DegreeTooLarge(f"{p}^{k} does not fit below 2^63")
    return FieldCtx(p, k, m, canonical_modulus(p, k))


def arith(ctx: FieldCtx, op: str, a, b=None) -> GFElem:
    """Dispatch one field operation on GFElem operands (``pow`` takes an int exponent)."""
    ia = ctx.index_of(a)
    if op == "neg":
        return GFElem(ctx, ctx.neg(ia))
    if op == "inv":
        return GFElem(ctx, ctx.inv(ia))
    if op == "pow":
        return GFElem(ctx, ctx.pow(ia, int(b)))
    ib = ctx.index_of(b)
    if op == "add":
        return GFElem(ctx, ctx.add(ia, ib))
    if op == "sub":
        return GFElem(ctx, ctx.sub(ia, ib))
    if op == "mul":
        return GFElem(ctx, ctx.mul(ia, ib))
    raise PreconditionError(f"unknown operation {op!r}")


def frobenius(ctx: FieldCtx, a) -> GFElem:
    return GFElem(ctx, ctx.frob(ctx.index_of(a)))


def enumerate_field(ctx: FieldCtx) -> Iterator[GFElem]:
    for i in range(ctx.q):
        yield GFElem(ctx, i)


def multiplicative_order(ctx: FieldCtx, a: int) -> int:
    n = ctx.q - 1
    order = n
    for r, e in factorint(n).items():
        for _ in range(e):
            if ctx.pow(a, order // r) == 1:
                order //= r
            else:
                break
    return order


def _least_generator(ctx: FieldCtx) -> int:
    n = ctx.q - 1
    if n == 1:
        return 1
    primes = list(factorint(n))
    for g in range(1, ctx.q):
        if all(ctx.pow(g, n // r) != 1 for r in primes):
            return g
    raise AssertionError("multiplicative group has no generator")


def find_generator(ctx: FieldCtx) -> GFElem:
    return GFElem(ctx, ctx.generator())


def is_square(ctx: FieldCtx, a) -> bool:
    return ctx.is_square(ctx.index_of(a))


def find_nonsquare(ctx: FieldCtx) -> GFElem:
    if ctx.p == 2:
        raise CharTwo("every element of a field of characteristic 2 is a square")
    for a in range(1, ctx.q):
        if not ctx.is_square(a):
            return GFElem(ctx, a)
    raise AssertionError("odd-characteristic field without non-squares")


def fixed_field_size(ctx: FieldCtx, n: int) -> int:
    from math import gcd

    return ctx.p ** gcd(ctx.m * n, ctx.k)


def fixed_indices(ctx: FieldCtx, n: int) -> list[int]:
    """Sorted indices of {x : sigma^n(x) = x}."""
    if n < 1:
        raise PreconditionError("fixed_set needs n >= 1")
    if ctx.k == 1:
        if ctx.q > TABLE_LIMIT:
            raise PreconditionError(f"fixed set of GF({ctx.p}) has {ctx.q} elements; too many to list")
        return list(range(ctx.q))
    if ctx.has_tables:
        allx = np.arange(ctx.q, dtype=np.int64)
        return [int(i) for i in np.nonzero(ctx.vfrob(allx, n) == allx)[0]]
    size = fixed_field_size(ctx, n)
    if size > TABLE_LIMIT:
        raise PreconditionError(f"fixed field of size {size} is too large to list")
    # the subfield of order s is {0} together with the powers of g^((q-1)/(s-1))
    h = ctx.pow(ctx.generator(), (ctx.q - 1) // (size - 1))
    out, cur = [0], 1
    for _ in range(size - 1):
        out.append(cur)
        cur = ctx.mul(cur, h)
    return sorted(out)


def fixed_set(ctx: FieldCtx, n: int) -> list[GFElem]:
    return [GFElem(ctx, i) for i in fixed_indices(ctx, n)]


def _build_tables(ctx: FieldCtx) -> tuple[np.ndarray, np.ndarray]:
    q, p = ctx.q, ctx.p
    n = q - 1
    exp = np.empty(max(n, 1), dtype=np.int64)
    exp[0] = 1
    if n > 1:
        g = ctx.generator()
        filled = 1
        while filled < n:
            take = min(filled, n - filled)
            c = ctx.pow(g, filled)
            exp[filled:filled + take] = _mul_by_const(ctx, exp[:take], c)
            filled += take
    log = np.full(q, -1, dtype=np.int64)
    log[exp[:n]] = np.arange(n, dtype=np.int64)
    if np.any(log[1:] < 0):
        raise AssertionError("generator does not span the multiplicative group")
    return exp, log


def _mul_by_const(ctx: FieldCtx, a: np.ndarray, c: int) -> np.ndarray:
    """Multiply an index array by a fixed element via its k x k matrix over F_p."""
    p, k = ctx.p, ctx.k
    if k == 1:
        return a * c % p
    rows = []
    cur = ctx.digits(c)
    for i in range(k):
        rows.append(cur)
        cur = ctx._mulmod_digits(cur, ctx.digits(p))  # times x
    mat = np.array(rows, dtype=np.int64)
    out = np.empty_like(a)
    for s in range(0, len(a), _CHUNK):
        block = a[s:s + _CHUNK]
        ds = np.stack(ctx._vdigits(block), axis=1)
        res = (ds @ mat) % p
        out[s:s + len(block)] = ctx._vfrom_digits([res[:, j] for j in range(k)])
    return out
