"""Slow, obviously-correct reference implementations used only by the tests.

Nothing here imports froblab's arithmetic; elements are coefficient tuples
and every operation is schoolbook.
"""

from __future__ import annotations

import itertools
import math


def digits(i: int, p: int, k: int) -> tuple[int, ...]:
    out = []
    for _ in range(k):
        out.append(i % p)
        i //= p
    return tuple(out)


def undigits(ds, p: int) -> int:
    v = 0
    for d in reversed(ds):
        v = v * p + d
    return v


def poly_divides(d: tuple, f: tuple, p: int) -> bool:
    """Does monic d divide f over F_p (both little-endian)?"""
    r = list(f)
    n = len(d) - 1
    for i in range(len(r) - 1, n - 1, -1):
        c = r[i] % p
        if c:
            for j in range(n + 1):
                r[i - n + j] = (r[i - n + j] - c * d[j]) % p
    return all(x % p == 0 for x in r[:n])


def monic_polys(p: int, deg: int):
    for low in itertools.product(range(p), repeat=deg):
        yield tuple(low) + (1,)


def is_irreducible_brute(f: tuple, p: int) -> bool:
    k = len(f) - 1
    for d in range(1, k // 2 + 1):
        for g in monic_polys(p, d):
            if poly_divides(g, f, p):
                return False
    return True


def least_irreducible(p: int, k: int) -> tuple:
    """Least (c_0 + c_1 p + ...) monic irreducible of degree k."""
    if k == 1:
        return (0, 1)
    for n in range(p ** k):
        f = digits(n, p, k) + (1,)
        if is_irreducible_brute(f, p):
            return f
    raise AssertionError("no irreducible polynomial")


class NaiveField:
    def __init__(self, p: int, k: int, modulus: tuple | None = None):
        self.p, self.k = p, k
        self.q = p ** k
        self.f = modulus or least_irreducible(p, k)

    def add(self, a: int, b: int) -> int:
        da, db = digits(a, self.p, self.k), digits(b, self.p, self.k)
        return undigits([(x + y) % self.p for x, y in zip(da, db)], self.p)

    def neg(self, a: int) -> int:
        return undigits([(-x) % self.p for x in digits(a, self.p, self.k)], self.p)

    def mul(self, a: int, b: int) -> int:
        p, k = self.p, self.k
        da, db = digits(a, p, k), digits(b, p, k)
        prod = [0] * (2 * k)
        for i in range(k):
            for j in range(k):
                prod[i + j] += da[i] * db[j]
        for i in range(2 * k - 1, k - 1, -1):
            c = prod[i] % p
            prod[i] = 0
            if c:
                for j in range(k + 1):
                    prod[i - k + j] -= c * self.f[j]
        return undigits([c % p for c in prod[:k]], p)

    def pow(self, a: int, n: int) -> int:
        r = 1
        for _ in range(n):
            r = self.mul(r, a)
        return r

    def order(self, a: int) -> int:
        if a == 0:
            return 0
        x, n = a, 1
        while x != 1:
            x = self.mul(x, a)
            n += 1
        return n

    def squares(self) -> set[int]:
        return {self.mul(x, x) for x in range(self.q)}

    def cubes(self) -> set[int]:
        return {self.mul(self.mul(x, x), x) for x in range(self.q)}

    def frob(self, a: int, e: int) -> int:
        """a^(p^e) by repeated p-th powers."""
        for _ in range(e):
            a = self.pow(a, self.p)
        return a

    def inv(self, a: int) -> int:
        for b in range(1, self.q):
            if self.mul(a, b) == 1:
                return b
        raise ZeroDivisionError


# ------------------------------------------------------ formula oracle
def eval_term(F: NaiveField, t, env: dict, params: dict, m: int):
    from froblab import formula as fm

    if isinstance(t, fm.Var):
        return env[t.name]
    if isinstance(t, fm.IntLit):
        return t.value % F.p
    if isinstance(t, fm.Param):
        return params[t.name]
    if isinstance(t, fm.Add):
        return F.add(eval_term(F, t.left, env, params, m), eval_term(F, t.right, env, params, m))
    if isinstance(t, fm.Sub):
        return F.add(eval_term(F, t.left, env, params, m), F.neg(eval_term(F, t.right, env, params, m)))
    if isinstance(t, fm.Mul):
        return F.mul(eval_term(F, t.left, env, params, m), eval_term(F, t.right, env, params, m))
    if isinstance(t, fm.Neg):
        return F.neg(eval_term(F, t.arg, env, params, m))
    if isinstance(t, fm.Pow):
        return F.pow(eval_term(F, t.base, env, params, m), t.exp)
    if isinstance(t, fm.Sigma):
        return F.frob(eval_term(F, t.arg, env, params, m), t.power * m)
    if isinstance(t, fm.FrobLit):
        return F.frob(eval_term(F, t.arg, env, params, m), t.e)
    raise TypeError(t)


def holds(F: NaiveField, f, env: dict, params: dict, m: int) -> bool:
    """Tarskian satisfaction by plain recursion over all q elements."""
    from froblab import formula as fm

    if isinstance(f, fm.Eq):
        return eval_term(F, f.left, env, params, m) == eval_term(F, f.right, env, params, m)
    if isinstance(f, fm.Not):
        return not holds(F, f.arg, env, params, m)
    if isinstance(f, fm.And):
        return holds(F, f.left, env, params, m) and holds(F, f.right, env, params, m)
    if isinstance(f, fm.Or):
        return holds(F, f.left, env, params, m) or holds(F, f.right, env, params, m)
    if isinstance(f, fm.Implies):
        return (not holds(F, f.left, env, params, m)) or holds(F, f.right, env, params, m)
    if isinstance(f, fm.Exists):
        return any(holds(F, f.body, {**env, f.var: v}, params, m) for v in range(F.q))
    if isinstance(f, fm.Forall):
        return all(holds(F, f.body, {**env, f.var: v}, params, m) for v in range(F.q))
    raise TypeError(f)


def brute_count(F: NaiveField, f, names: list[str], params: dict, m: int) -> int:
    return sum(holds(F, f, dict(zip(names, vals)), params, m)
               for vals in itertools.product(range(F.q), repeat=len(names)))


def isqrt_ceil(n: int) -> int:
    r = math.isqrt(n)
    return r if r * r == n else r + 1
