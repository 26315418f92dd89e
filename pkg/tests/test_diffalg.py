import math
import random

import pytest
from sympy.polys.domains import ZZ
from sympy.polys.galoistools import gf_gcd, gf_pow_mod, gf_sub, gf_strip

from froblab import errors
from froblab.counting import evaluate
from froblab.diffalg import (
    DIM_ONE, FINITE, DiffPoly, count_roots, parse_diffpoly, root_count_stability, sigma_degree_probe,
    sigma_specialize, torus_subgroup,
)
from froblab.field import make_field
from froblab.formula import ParamSpec, parse
from oracles import NaiveField


def roots_sympy(g, p, k):
    """deg gcd(g, x^(p^k) - x) over F_p, via sympy's dense big-endian polys."""
    G = gf_strip([ZZ(c % p) for c in reversed(g)])
    x = [ZZ(1), ZZ(0)]
    xq = gf_pow_mod(x, p ** k, G, p, ZZ)
    h = gf_gcd(G, gf_sub(xq, x, p, ZZ), p, ZZ)
    return len(h) - 1


def roots_brute(g, p, k):
    N = NaiveField(p, k)
    n = 0
    for a in range(N.q):
        acc = 0
        for e, c in enumerate(g):
            for _ in range(c % p):
                acc = N.add(acc, N.pow(a, e))
        n += acc == 0
    return n


# -------------------------------------------------------------- DiffPoly
def test_parse_and_print():
    f = parse_diffpoly("s(x) - x^2", 5)
    assert f.order == 1 and f.total_degree == 2
    assert str(f) == "s(x) - x^2"
    assert parse_diffpoly("x", 3).order == 0
    g = parse_diffpoly("s^2(x) - x - 1", 2)
    assert g.order == 2
    assert parse_diffpoly(str(g), 2) == g
    with pytest.raises(errors.PreconditionError):
        parse_diffpoly("x - x", 3)
    with pytest.raises(errors.PreconditionError):
        parse_diffpoly("x*y", 3)
    h = parse_diffpoly("s(x) - c*x", 7, {"c": ParamSpec("c", "int", 3)})
    assert sigma_specialize(h, 7, 1) == [0, 4, 0, 0, 0, 0, 0, 1]
    with pytest.raises(errors.PreconditionError):
        parse_diffpoly("s(x) - c*x", 7, {"c": ParamSpec("c", "gen")})


def test_sigma_specialize_examples():
    assert sigma_specialize(parse_diffpoly("s(x) - x", 3), 3, 1) == [0, 2, 0, 1]
    assert sigma_specialize(parse_diffpoly("s(x) - x^2", 5), 5, 1) == [0, 0, 4, 0, 0, 1]
    g = sigma_specialize(parse_diffpoly("s^2(x) - x - 1", 2), 2, 1)
    assert g == [1, 1, 0, 0, 1]
    # products of shifts multiply exponents out
    h = sigma_specialize(parse_diffpoly("x*s(x) - 1", 3), 3, 2)
    assert h[0] == 2 and h[10] == 1 and sum(1 for c in h if c) == 2


@pytest.mark.parametrize("text,p,m", [("s(x) - x", 3, 1), ("s(x) - x^2", 5, 1), ("s^2(x) - x - 1", 2, 1),
                                      ("x*s(x) - 1", 3, 1), ("s(x) + x^3 + 2", 7, 1), ("s^2(x) - s(x)", 2, 2)])
def test_specialization_agrees_with_frobenius(text, p, m):
    f = parse_diffpoly(text, p)
    g = sigma_specialize(f, p, m)
    assert len(g) - 1 <= f.total_degree * p ** (f.order * m)
    for k in (2, 3, 4):
        F = make_field(p, k, m)
        if F.q > 3000:
            continue
        for a in range(0, F.q, max(1, F.q // 50)):
            val = 0
            for e, c in enumerate(g):
                val = F.add(val, F.mul(c % p, F.pow(a, e)))
            assert (val == 0) == evaluate(F, f.equation(), {"x": a})


# ------------------------------------------------------------ root counts
@pytest.mark.parametrize("p,k", [(2, 3), (3, 2), (5, 2), (7, 2), (3, 4), (2, 6)])
def test_count_roots_against_brute(p, k):
    F = make_field(p, k)
    rng = random.Random(p * 10 + k)
    for _ in range(8):
        g = [rng.randrange(p) for _ in range(rng.randint(2, 9))]
        if not any(g):
            continue
        while g and g[-1] == 0:
            g.pop()
        assert count_roots(F, g) == roots_brute(g, p, k)


@pytest.mark.parametrize("p,k", [(2, 23), (3, 15), (5, 11), (2, 40), (7, 9)])
def test_count_roots_gcd_route(p, k):
    F = make_field(p, k)
    assert F.q > 1 << 22
    rng = random.Random(k)
    for _ in range(6):
        g = [rng.randrange(p) for _ in range(rng.randint(2, 30))] + [1]
        assert count_roots(F, g) == roots_sympy(g, p, k)


def test_root_count_examples():
    rep = root_count_stability(parse_diffpoly("s(x) - x", 3), 3, 1, [2, 4, 6])
    assert [c for _, c in rep.counts] == [3, 3, 3] and rep.verdict == "bounded"
    rep = root_count_stability(parse_diffpoly("s(x) - x^2", 5), 5, 1, [2, 4])
    assert [c for _, c in rep.counts] == [4, 4]
    for k, c in rep.counts:
        assert c == 1 + math.gcd(3, 5 ** k - 1)
    rep = root_count_stability(parse_diffpoly("x", 7), 7, 1, [1, 2, 3])
    assert [c for _, c in rep.counts] == [1, 1, 1] and rep.constant
    assert rep.crosscheck_ok


def test_stability_crosscheck_with_engine():
    for text, p in [("s(x) - x", 2), ("s^2(x) - x", 3), ("x*s(x) - 1", 3), ("s(x) - x^2", 5)]:
        rep = root_count_stability(parse_diffpoly(text, p), p, 1, [2, 3, 4, 6])
        assert rep.crosscheck_ok
        assert all(c <= rep.degree for _, c in rep.counts)


def test_stability_schedule_errors():
    f = parse_diffpoly("s(x) - x", 3)
    with pytest.raises(errors.PreconditionError):
        root_count_stability(f, 3, 1, [])
    with pytest.raises(errors.PreconditionError):
        root_count_stability(f, 3, 1, [4, 2])


# ---------------------------------------------------------------- torus
def test_torus_examples():
    r = torus_subgroup(make_field(5, 2))
    assert (r.index, r.kernel, r.subgroup) == (4, 4, 6) and r.closed
    assert torus_subgroup(make_field(2, 3)).index == 1
    r = torus_subgroup(make_field(3, 1))
    assert r.index == 2 and r.subgroup == 1
    with pytest.raises(errors.PreconditionError):
        torus_subgroup(make_field(3, 2, 2))


@pytest.mark.parametrize("p,k", [(5, 2), (3, 3), (7, 2), (2, 5)])
def test_torus_against_brute(p, k):
    F = make_field(p, k)
    T = {F.mul(F.inv(x), F.pow(x, p)) for x in range(1, F.q)}
    r = torus_subgroup(F)
    assert r.subgroup == len(T) and r.subgroup * (p - 1) == F.q - 1
    assert all(F.mul(a, b) in T for a in T for b in T)


def test_torus_normalized_grows():
    vals = [torus_subgroup(make_field(3, k)).normalized for k in (2, 4, 8, 12)]
    assert vals == sorted(vals) and vals[-1] > 0.9


# ---------------------------------------------------------------- probe
def test_probe_examples():
    r = sigma_degree_probe(parse("s(x) = x"), 3, 1, [4, 6, 8])
    assert r.verdict == FINITE and [c for _, c, _ in r.per_k] == [3, 3, 3]
    assert sigma_degree_probe(parse("x = x"), 3, 1, [4, 6, 8]).verdict == DIM_ONE
    r = sigma_degree_probe(parse("!(s(x) = x)"), 3, 1, [4, 6, 8])
    assert r.verdict == DIM_ONE and [c for _, c, _ in r.per_k] == [3 ** k - 3 for k in (4, 6, 8)]
    assert "verified" not in r.verdict


def test_probe_errors():
    with pytest.raises(errors.PreconditionError):
        sigma_degree_probe(parse("E y. x = y"), 3, 1, [2, 3])
    with pytest.raises(errors.PreconditionError):
        sigma_degree_probe(parse("x = y"), 3, 1, [2, 3])
    # ratio drops from 1 to 1/2: neither trend has settled
    with pytest.raises(errors.Inconclusive):
        sigma_degree_probe(parse("s^2(x) = x"), 3, 1, [2, 4])
