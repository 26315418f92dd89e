import itertools
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from froblab import errors
from froblab.dimension import (
    DIVERGENT, KPoint, check_subadditivity, delta, estimate_dimension, fit_dimension, quotient_cover, theta_test,
)
from froblab.field import make_field
from froblab.formula import ParamSpec, parse, random_formula


def quotient_set_brute(F, s):
    """All (a-b)/(c-d) with c != d, by plain scalar loops."""
    out = set()
    for c, d in itertools.permutations(s, 2):
        inv = F.inv(F.sub(c, d))
        for a, b in itertools.product(s, repeat=2):
            out.add(F.mul(F.sub(a, b), inv))
    return out


# ----------------------------------------------------------- estimates
def test_full_line_has_dimension_one():
    est = estimate_dimension(3, [4, 6, 8], 1, parse("x = x"))
    assert est.fitted_dim == 1 and est.residual == 0
    assert [pt.count for pt in est.per_k] == [81, 729, 6561]
    assert all(pt.delta == pytest.approx(1.0) for pt in est.per_k)


def test_fixed_field_dimension_zero():
    phi = parse("s(x) = x")
    est = estimate_dimension(3, [4, 6, 8], 1, phi)
    assert [pt.count for pt in est.per_k] == [3, 3, 3]
    assert [pt.delta for pt in est.per_k] == pytest.approx([1 / 4, 1 / 6, 1 / 8])
    # 1/8 sits above the default 0.1 tolerance, so this short schedule is divergent
    assert est.fitted_dim == DIVERGENT
    assert estimate_dimension(3, [4, 6, 8], 1, phi, tol=0.15).fitted_dim == 0
    assert estimate_dimension(3, [8, 10, 12], 1, phi).fitted_dim == 0


def test_graph_of_square_map():
    est = estimate_dimension(5, [3, 5, 7], 1, parse("y = x*x"))
    assert [pt.count for pt in est.per_k] == [5 ** 3, 5 ** 5, 5 ** 7]
    assert est.fitted_dim == 1 and est.n_free == 2


def test_curve_dimension_with_shrinking_residual():
    phi = parse("z*z = x + c", params=["c"])
    params = {"c": ParamSpec("c", "int", 1)}
    est = estimate_dimension(3, [5, 7, 9], 1, phi, params)
    assert est.fitted_dim == 1
    res = [abs(pt.delta - 1) for pt in est.per_k]
    assert res[-1] <= res[0]


def test_product_additivity():
    p, sched = 2, [8, 10, 12]
    phi, psi = parse("s(x) = x"), parse("s(y) != y")
    both = parse("s(x) = x & s(y) != y")
    a = estimate_dimension(p, sched, 1, phi)
    b = estimate_dimension(p, sched, 1, psi)
    ab = estimate_dimension(p, sched, 1, both)
    for pa, pb, pab in zip(a.per_k, b.per_k, ab.per_k):
        assert pab.count == pa.count * pb.count
    assert a.fitted_dim == 0 and b.fitted_dim == 1
    assert ab.fitted_dim == a.fitted_dim + b.fitted_dim


@settings(max_examples=30, deadline=None)
@given(st.randoms(use_true_random=False))
def test_delta_bounded_by_free_count(rng):
    phi = random_formula(rng, ["x", "y"], ["u"], depth=4)
    est = estimate_dimension(2, [3, 4, 5], 1, phi)
    for pt in est.per_k:
        assert pt.delta is None or -1e-12 <= pt.delta <= est.n_free + 1e-12


def test_fit_rules():
    assert fit_dimension([KPoint(4, 0, None)]) == (DIVERGENT, None, "empty set at k_max")
    pts = [KPoint(k, 1, delta(1, k, 3)) for k in (2, 4, 8)]
    d, r, _ = fit_dimension(pts)
    assert d == 0 and r == 0
    # last step grows though the residual is small
    grow = [KPoint(1, 0, 0.99), KPoint(2, 0, 0.985), KPoint(3, 0, 1.05)]
    assert fit_dimension(grow)[0] == DIVERGENT
    assert delta(9, 2, 3) == pytest.approx(1.0)


def test_estimate_preconditions():
    phi = parse("x = $c")
    with pytest.raises(errors.PreconditionError):
        estimate_dimension(3, [], 1, parse("x = x"))
    with pytest.raises(errors.PreconditionError):
        estimate_dimension(3, [4, 4], 1, parse("x = x"))
    with pytest.raises(errors.PreconditionError):
        estimate_dimension(3, [2, 3], 1, phi, {"c": ParamSpec("c", "idx", 2)})
    assert estimate_dimension(3, [2, 3], 1, phi, {"c": ParamSpec("c", "gen")}).fitted_dim == 0
    with pytest.raises(errors.BudgetExceeded) as info:
        estimate_dimension(3, [4, 12], 1, parse("x = y"), budget=10 ** 6)
    assert "k=12" in str(info.value)


def test_to_dict_is_plain():
    d = estimate_dimension(3, [2, 3], 1, parse("s(x) = x")).to_dict()
    assert d["per_k"][0] == {"k": 2, "count": 3, "delta": pytest.approx(0.5)}
    assert d["schedule"] == [2, 3]


# --------------------------------------------------------------- theta
def test_theta_examples():
    F27 = make_field(3, 3)
    r = theta_test(F27, parse("x = x"))
    assert r.theta_holds and r.card == 27 and r.dichotomy_ok
    r = theta_test(F27, parse("s(x) = x"))
    assert not r.theta_holds and r.card == 3 and r.dichotomy_ok
    assert r.witness not in {0, 1, 2}
    r = theta_test(F27, parse("x = 2"))
    assert not r.theta_holds and r.card == 1 and r.dichotomy_ok


@pytest.mark.parametrize("p,k", [(2, 4), (3, 3), (5, 2), (7, 2), (2, 6), (13, 1), (3, 4)])
def test_quotient_cover_matches_brute(p, k):
    F = make_field(p, k)
    rng = random.Random(p * 31 + k)
    for size in [1, 2, 3, 4, 5, 7]:
        if size > F.q:
            continue
        s = sorted(rng.sample(range(F.q), size))
        covered, witness = quotient_cover(F, np.array(s, dtype=np.int64))
        brute = quotient_set_brute(F, s)
        assert covered == (len(brute) == F.q)
        if not covered:
            assert witness == min(set(range(F.q)) - brute)


@pytest.mark.parametrize("p,k,n", [(2, 6, 2), (2, 6, 3), (3, 4, 2), (2, 12, 4), (5, 4, 2), (2, 8, 4)])
def test_theta_on_subfields_and_dichotomy(p, k, n):
    F = make_field(p, k)
    psi = parse(f"s^{n}(x) = x")
    r = theta_test(F, psi)
    sub = p ** math.gcd(n, k)
    assert r.card == sub
    assert r.theta_holds == (sub == F.q)
    assert r.dichotomy_ok


def test_theta_large_set_uses_pigeonhole():
    F = make_field(3, 10)
    r = theta_test(F, parse("E z. z*z = x"))
    assert r.theta_holds and r.card == (F.q + 1) // 2


def test_theta_precondition():
    with pytest.raises(errors.PreconditionError):
        theta_test(make_field(5), parse("x = y"))


# ------------------------------------------------------- subadditivity
def test_subadditivity_examples():
    rep = check_subadditivity(make_field(7), parse("E z. z*z = x + y"), ["x"], ["y"])
    assert rep.fibers.total == 28 and rep.fibers.min_fiber == rep.fibers.max_fiber == 4
    assert rep.sandwich_ok and rep.log_lower == rep.log_upper
    rep = check_subadditivity(make_field(11), parse("x = x & y = y"), ["x"], ["y"])
    assert rep.fibers.total == 121 and rep.log_total == pytest.approx(2.0)
    rep = check_subadditivity(make_field(3, 2), parse("y = x*x"), ["x"], ["y"])
    f = rep.fibers
    assert (f.min_fiber, f.max_fiber, f.image_count, f.total) == (1, 2, 5, 9)
    assert rep.sandwich_ok
    assert rep.log_lower <= rep.log_total <= rep.log_upper
