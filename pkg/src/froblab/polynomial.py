"""Dense univariate polynomials over a prime field F_p.

Polynomials are lists of residues, little-endian, with no trailing zeros;
the zero polynomial is the empty list.
"""

from __future__ import annotations

from typing import Sequence

Poly = list


def trim(a: Sequence[int], p: int) -> Poly:
    out = [c % p for c in a]
    while out and out[-1] == 0:
        out.pop()
    return out


def degree(a: Sequence[int]) -> int:
    return len(a) - 1


def add(a: Poly, b: Poly, p: int) -> Poly:
    n = max(len(a), len(b))
    return trim([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)], p)


def sub(a: Poly, b: Poly, p: int) -> Poly:
    n = max(len(a), len(b))
    return trim([(a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0) for i in range(n)], p)


def mul(a: Poly, b: Poly, p: int) -> Poly:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] += ai * bj
    return trim(out, p)


def divmod_(a: Poly, b: Poly, p: int) -> tuple[Poly, Poly]:
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    a = trim(a, p)
    db = len(b) - 1
    inv_lead = pow(b[-1], p - 2, p)
    quo = [0] * max(len(a) - db, 0)
    rem = list(a)
    for shift in range(len(a) - 1 - db, -1, -1):
        c = rem[shift + db] * inv_lead % p
        if c:
            quo[shift] = c
            for j, bj in enumerate(b):
                rem[shift + j] = (rem[shift + j] - c * bj) % p
    return trim(quo, p), trim(rem[:db] if db > 0 else [], p)


def mod(a: Poly, b: Poly, p: int) -> Poly:
    return divmod_(a, b, p)[1]


def monic(a: Poly, p: int) -> Poly:
    if not a:
        return []
    inv = pow(a[-1], p - 2, p)
    return [c * inv % p for c in a]


def gcd(a: Poly, b: Poly, p: int) -> Poly:
    a, b = trim(a, p), trim(b, p)
    while b:
        a, b = b, mod(a, b, p)
    return monic(a, p)


def powmod(base: Poly, e: int, f: Poly, p: int) -> Poly:
    result: Poly = [1] if len(f) > 1 else []
    base = mod(base, f, p)
    while e > 0:
        if e & 1:
            result = mod(mul(result, base, p), f, p)
        base = mod(mul(base, base, p), f, p)
        e >>= 1
    return result


def x_pow_p_iter(f: Poly, p: int, times: int) -> Poly:
    """Return x^(p^times) mod f by iterating the p-th power map."""
    h = mod([0, 1], f, p)
    for _ in range(times):
        h = powmod(h, p, f, p)
    return h


def is_irreducible(f: Poly, p: int) -> bool:
    """Irreducibility test: gcd(f, x^(p^i) - x) = 1 for every i <= deg(f)/2."""
    f = trim(f, p)
    k = degree(f)
    if k < 1:
        return False
    if k == 1:
        return True
    h = mod([0, 1], f, p)
    for _ in range(1, k // 2 + 1):
        h = powmod(h, p, f, p)
        if degree(gcd(f, sub(h, [0, 1], p), p)) > 0:
            return False
    return True


def count_roots_in_extension(g: Poly, p: int, k: int) -> int:
    """Number of distinct roots of g (coefficients in F_p) inside GF(p^k).

    Uses deg gcd(g, x^(p^k) - x); the field polynomial is squarefree so every
    root contributes exactly one linear factor.
    """
    g = trim(g, p)
    if not g:
        raise ValueError("zero polynomial has every element as a root")
    if len(g) == 1:
        return 0
    h = x_pow_p_iter(g, p, k)
    return degree(gcd(g, sub(h, [0, 1], p), p))


def evaluate(a: Poly, x: int, p: int) -> int:
    acc = 0
    for c in reversed(a):
        acc = (acc * x + c) % p
    return acc
