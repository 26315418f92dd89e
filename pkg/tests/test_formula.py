import pytest
from hypothesis import given, settings, strategies as st

from froblab import errors
from froblab.formula import (
    Add, And, Eq, Exists, Forall, FrobLit, Implies, IntLit, Mul, Neg, Not, Or, Param, ParamSpec, Pow,
    Sigma, Sub, Var, bound_vars, free_vars, has_sigma, params_of, parse, parse_param, parse_term,
    quantifier_depth, ring_text, specialize, to_text, validate,
)

x, y, z = Var("x"), Var("y"), Var("z")


# ------------------------------------------------------------- parsing
def test_parse_examples():
    assert parse("E z. z*z = x + y") == Exists("z", Eq(Mul(z, z), Add(x, y)))
    assert parse("s(x) = x") == Eq(Sigma(1, x), x)
    with pytest.raises(errors.ParseError):
        parse("E z. z*z = x +")


def test_parse_precedence_and_sugar():
    assert parse("x + y*z = 1") == Eq(Add(x, Mul(y, z)), IntLit(1))
    assert parse("x - y - z = 0") == Eq(Sub(Sub(x, y), z), IntLit(0))
    assert parse("-x^2 = 1") == Eq(Neg(Pow(x, 2)), IntLit(1))
    assert parse("s^2(x) = s(s(x))") == Eq(Sigma(2, x), Sigma(1, Sigma(1, x)))
    assert parse("x != y") == Not(Eq(x, y))
    assert parse("x = 0 -> y = 0 -> z = 0") == Implies(Eq(x, IntLit(0)), Implies(Eq(y, IntLit(0)), Eq(z, IntLit(0))))
    assert parse("x = 0 | y = 0 & z = 0") == Or(Eq(x, IntLit(0)), And(Eq(y, IntLit(0)), Eq(z, IntLit(0))))
    assert parse("E y z. x = y*z") == Exists("y", Exists("z", Eq(x, Mul(y, z))))
    assert parse("A y. (x = y) | (x + 1 = y)") == Forall("y", Or(Eq(x, y), Eq(Add(x, IntLit(1)), y)))
    assert parse("(x + 1)*y = 0") == Eq(Mul(Add(x, IntLit(1)), y), IntLit(0))
    assert parse("x = $c") == Eq(x, Param("c"))
    assert parse("x = c", params=["c"]) == Eq(x, Param("c"))
    assert parse("frob^3(x) = x") == Eq(FrobLit(x, 3), x)


def test_quantifier_body_extends_right():
    f = parse("E z. z = x & z = y")
    assert f == Exists("z", And(Eq(z, x), Eq(z, y)))


@pytest.mark.parametrize("text,line,col", [
    ("x = ", 1, 5),
    ("x = y )", 1, 7),
    ("x = y &\n  z ?", 2, 5),
    ("E . x = x", 1, 3),
    ("s^0(x) = x", 1, 1),
])
def test_parse_error_position(text, line, col):
    with pytest.raises(errors.ParseError) as info:
        parse(text)
    assert (info.value.line, info.value.column) == (line, col)


def test_shadowing_rejected():
    with pytest.raises(errors.ShadowedVariable):
        parse("E x. E x. x = x")
    with pytest.raises(errors.ShadowedVariable):
        parse("x = 1 & E x. x = 2")
    # sibling scopes may reuse a name
    parse("(E z. z = x) & (E z. z*z = x)")


def test_parse_term():
    assert parse_term("s(x) + 1") == Add(Sigma(1, x), IntLit(1))
    with pytest.raises(errors.ParseError):
        parse_term("x = y")


# ---------------------------------------------------------- traversals
def test_free_vars_examples():
    assert free_vars(parse("E z. z*z = x + y")) == ["x", "y"]
    assert free_vars(parse("s(x)=x")) == ["x"]
    assert free_vars(parse("y = 1 & x = y")) == ["y", "x"]
    f = parse("E z. z*z = x + c", params=["c"])
    assert free_vars(f) == ["x"] and params_of(f) == ["c"]
    assert bound_vars(f) == ["z"]
    assert quantifier_depth(parse("E u. (A v. u = v) & (E w. E t. w = t)")) == 3


def test_validate():
    f = parse("x = $c")
    with pytest.raises(errors.MissingParam):
        validate(f, {})
    validate(f, {"c": ParamSpec("c", "int", 1)})
    with pytest.raises(errors.ShadowedVariable):
        validate(Exists("x", Exists("x", Eq(x, x))), {})


def test_param_spec():
    assert parse_param("c=int:0") == ParamSpec("c", "int", 0)
    assert parse_param(" g = gen ") == ParamSpec("g", "gen", None)
    assert parse_param("c=idx:5").to_text() == "c=idx:5"
    assert not parse_param("c=idx:5").schedule_stable
    assert parse_param("n=nonsq").schedule_stable
    for bad in ["c", "c=int", "c=gen:3", "c=real:1"]:
        with pytest.raises(errors.PreconditionError):
            parse_param(bad)


# ------------------------------------------------------- specialization
def test_specialize_examples():
    f = specialize(parse("s(x) = x"), 3, 1)
    assert f == Eq(FrobLit(x, 1), x)
    assert ring_text(f, 3) == "x^{3} = x"
    g = specialize(parse("s(s(x))*x = 1"), 2, 1)
    assert not has_sigma(g)
    assert ring_text(g, 2) == "x^{4}*x = 1"
    h = parse("E z. z*z = x + 1")
    assert specialize(h, 5, 2) == h
    assert specialize(parse("s^2(x) = x"), 3, 2) == Eq(FrobLit(x, 4), x)


def _skeleton(f):
    if isinstance(f, Eq):
        return "eq"
    if isinstance(f, (Exists, Forall)):
        return (type(f).__name__, f.var, _skeleton(f.body))
    if isinstance(f, Not):
        return ("not", _skeleton(f.arg))
    return (type(f).__name__, _skeleton(f.left), _skeleton(f.right))


# ---------------------------------------------------------- random ASTs
NAMES = ["x", "y", "u", "v", "w"]


def terms(scope, depth):
    leaves = st.one_of(
        st.sampled_from(scope).map(Var),
        st.integers(0, 12).map(IntLit),
        st.sampled_from(["a", "b"]).map(Param),
    )
    if depth <= 1:
        return leaves
    sub = terms(scope, depth - 1)
    return st.one_of(
        leaves,
        st.builds(Add, sub, sub), st.builds(Sub, sub, sub), st.builds(Mul, sub, sub),
        st.builds(Neg, sub), st.builds(Pow, sub, st.integers(0, 5)),
        st.builds(Sigma, st.integers(1, 3), sub),
    )


@st.composite
def formulas(draw, depth=6, scope=("x", "y")):
    scope = list(scope)
    kind = draw(st.sampled_from(["eq", "eq", "not", "and", "or", "imp", "q"] if depth > 1 else ["eq"]))
    if kind == "eq":
        tdepth = max(1, min(depth, 4))
        return Eq(draw(terms(scope, tdepth)), draw(terms(scope, tdepth)))
    if kind == "not":
        return Not(draw(formulas(depth - 1, scope)))
    if kind == "q":
        avail = [n for n in NAMES if n not in scope]
        if not avail:
            return Eq(draw(terms(scope, 2)), draw(terms(scope, 2)))
        v = draw(st.sampled_from(avail))
        cls = draw(st.sampled_from([Exists, Forall]))
        return cls(v, draw(formulas(depth - 1, scope + [v])))
    cls = {"and": And, "or": Or, "imp": Implies}[kind]
    return cls(draw(formulas(depth - 1, scope)), draw(formulas(depth - 1, scope)))


@settings(max_examples=300, deadline=None)
@given(formulas())
def test_print_parse_roundtrip(f):
    assert parse(to_text(f)) == f


@settings(max_examples=150, deadline=None)
@given(formulas(), st.integers(1, 3), st.sampled_from([2, 3, 5]))
def test_specialize_structure(f, m, p):
    g = specialize(f, p, m)
    assert not has_sigma(g)
    assert _skeleton(g) == _skeleton(f)
    assert specialize(g, p, m) == g
    assert free_vars(g) == free_vars(f)
    assert parse(to_text(g)) == g


@settings(max_examples=100, deadline=None)
@given(st.randoms(use_true_random=False))
def test_library_random_formulas_are_alpha_valid(rng):
    from froblab.formula import random_formula, check_alpha

    f = random_formula(rng, ["x", "y"], ["u", "v", "w"], depth=6)
    check_alpha(f)
    assert set(free_vars(f)) <= {"x", "y"}
    assert parse(to_text(f)) == f
