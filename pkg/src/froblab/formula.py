"""First-order difference-ring formulas: AST, parser, printer, specialization.

Concrete grammar (ASCII)::

    formula  := implies
    implies  := disj ['->' implies]
    disj     := conj {'|' conj}
    conj     := unary {'&' unary}
    unary    := '!' unary | ('E' | 'A') name {name} '.' formula | atom
    atom     := term ('=' | '!=') term | '(' formula ')'
    term     := prod {('+' | '-') prod}
    prod     := neg {'*' neg}
    neg      := '-' neg | power
    power    := primary ['^' INT]
    primary  := INT | name | '$' name | 's' ['^' INT] '(' term ')'
              | 'frob' ['^' INT] '(' term ')' | '(' term ')'

``s^j(t)`` is sigma^j(t); ``frob^e(t)`` is the ring term t^(p^e) produced by
specialization; ``$c`` is a parameter.  ``a != b`` is sugar for ``!(a = b)``.
Names ``E``, ``A``, ``s`` and ``frob`` are reserved.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Union

from .errors import MissingParam, ParseError, PreconditionError, ShadowedVariable


# ---------------------------------------------------------------- terms
@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class IntLit:
    value: int  # non-negative; reduced mod p when bound


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Add:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Sub:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Mul:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Neg:
    arg: "Term"


@dataclass(frozen=True)
class Pow:
    base: "Term"
    exp: int


@dataclass(frozen=True)
class Sigma:
    power: int
    arg: "Term"


@dataclass(frozen=True)
class FrobLit:
    arg: "Term"
    e: int


Term = Union[Var, IntLit, Param, Add, Sub, Mul, Neg, Pow, Sigma, FrobLit]


# ------------------------------------------------------------- formulas
@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    var: str
    body: "Formula"


Formula = Union[Eq, And, Or, Implies, Not, Exists, Forall]

TERM_BINARY = (Add, Sub, Mul)
CONNECTIVES = (And, Or, Implies)
QUANTIFIERS = (Exists, Forall)
RESERVED = frozenset({"E", "A", "s", "frob"})


# ------------------------------------------------------------ parameters
@dataclass(frozen=True)
class ParamSpec:
    """How a named parameter is realized in a given field.

    kind is one of ``int`` (prime-field constant), ``gen`` (least generator),
    ``nonsq`` (least non-square) or ``idx`` (explicit canonical index).
    """

    name: str
    kind: str
    value: int | None = None

    def resolve(self, ctx) -> int:
        from .field import find_generator, find_nonsquare

        if self.kind == "int":
            return int(self.value) % ctx.p
        if self.kind == "gen":
            return find_generator(ctx).index
        if self.kind == "nonsq":
            return find_nonsquare(ctx).index
        if self.kind == "idx":
            if not 0 <= int(self.value) < ctx.q:
                raise PreconditionError(f"param {self.name}: index {self.value} not in GF({ctx.q})")
            return int(self.value)
        raise PreconditionError(f"unknown param kind {self.kind!r}")

    @property
    def schedule_stable(self) -> bool:
        return self.kind in ("int", "gen", "nonsq")

    def to_text(self) -> str:
        if self.kind in ("int", "idx"):
            return f"{self.name}={self.kind}:{self.value}"
        return f"{self.name}={self.kind}"


def parse_param(text: str) -> ParamSpec:
    """Parse ``name=int:V | name=gen | name=nonsq | name=idx:V``."""
    m = re.fullmatch(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(int|gen|nonsq|idx)(?::(-?\d+))?\s*", text)
    if not m:
        raise PreconditionError(f"bad param binding {text!r}")
    name, kind, val = m.groups()
    if kind in ("int", "idx") and val is None:
        raise PreconditionError(f"param binding {text!r} needs a value")
    if kind in ("gen", "nonsq") and val is not None:
        raise PreconditionError(f"param binding {text!r} takes no value")
    return ParamSpec(name, kind, int(val) if val is not None else None)


# ------------------------------------------------------------- tokenizer
_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)|(?P<int>\d+)|(?P<param>\$[A-Za-z_][A-Za-z0-9_]*)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>->|!=|[=+\-*^().&|!])"
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "ws":
            chunk = m.group()
            for i, ch in enumerate(chunk):
                if ch == "\n":
                    line += 1
                    line_start = pos + i + 1
        else:
            toks.append(_Tok(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: _Tok | None = None):
        tok = tok or self.tok
        where = f"'{tok.text}'" if tok.kind != "eof" else "end of input"
        raise ParseError(f"{msg}, found {where}", tok.line, tok.col)

    def accept(self, text: str) -> bool:
        if self.tok.kind in ("op", "name") and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text: str):
        if not self.accept(text):
            self.error(f"expected '{text}'")

    def expect_int(self) -> int:
        if self.tok.kind != "int":
            self.error("expected an integer")
        v = int(self.tok.text)
        self.i += 1
        return v

    def expect_name(self) -> str:
        t = self.tok
        if t.kind != "name" or t.text in RESERVED:
            self.error("expected a variable name")
        self.i += 1
        return t.text

    # formulas
    def formula(self) -> Formula:
        left = self.disj()
        if self.accept("->"):
            return Implies(left, self.formula())
        return left

    def disj(self) -> Formula:
        f = self.conj()
        while self.accept("|"):
            f = Or(f, self.conj())
        return f

    def conj(self) -> Formula:
        f = self.unary()
        while self.accept("&"):
            f = And(f, self.unary())
        return f

    def unary(self) -> Formula:
        if self.accept("!"):
            return Not(self.unary())
        t = self.tok
        if t.kind == "name" and t.text in ("E", "A"):
            self.i += 1
            names = [self.expect_name()]
            while self.tok.kind == "name" and self.tok.text not in RESERVED:
                names.append(self.expect_name())
            self.expect(".")
            body = self.formula()
            cls = Exists if t.text == "E" else Forall
            for v in reversed(names):
                body = cls(v, body)
            return body
        return self.atom()

    def atom(self) -> Formula:
        start = self.i
        try:
            left = self.term()
            if self.accept("="):
                return Eq(left, self.term())
            if self.accept("!="):
                return Not(Eq(left, self.term()))
            self.error("expected '=' or '!='")
        except ParseError as err:
            if self.toks[start].text != "(":
                raise
            first_error = err
        self.i = start
        self.expect("(")
        try:
            f = self.formula()
        except ParseError as second:
            # report whichever reading got further into the input
            if (second.line, second.column) >= (first_error.line, first_error.column):
                raise
            raise first_error
        self.expect(")")
        return f

    # terms
    def term(self) -> Term:
        t = self.prod()
        while True:
            if self.accept("+"):
                t = Add(t, self.prod())
            elif self.accept("-"):
                t = Sub(t, self.prod())
            else:
                return t

    def prod(self) -> Term:
        t = self.neg()
        while self.accept("*"):
            t = Mul(t, self.neg())
        return t

    def neg(self) -> Term:
        if self.accept("-"):
            return Neg(self.neg())
        return self.power()

    def power(self) -> Term:
        base = self.primary()
        if self.accept("^"):
            return Pow(base, self.expect_int())
        return base

    def primary(self) -> Term:
        t = self.tok
        if t.kind == "int":
            self.i += 1
            return IntLit(int(t.text))
        if t.kind == "param":
            self.i += 1
            return Param(t.text[1:])
        if t.kind == "name" and t.text in ("s", "frob"):
            self.i += 1
            n = 1
            if self.accept("^"):
                n = self.expect_int()
            self.expect("(")
            arg = self.term()
            self.expect(")")
            if t.text == "s":
                if n < 1:
                    self.error("sigma power must be >= 1", t)
                return Sigma(n, arg)
            return FrobLit(arg, n)
        if t.kind == "name":
            return Var(self.expect_name())
        if self.accept("("):
            inner = self.term()
            self.expect(")")
            return inner
        self.error("expected a term")


def parse(text: str, params: Iterable[str] | None = None) -> Formula:
    """Parse formula text; names listed in ``params`` become Param nodes where free."""
    ps = _Parser(text)
    f = ps.formula()
    if ps.tok.kind != "eof":
        ps.error("unexpected trailing input")
    check_alpha(f)
    if params:
        f = bind_params(f, params)
    return f


def parse_term(text: str) -> Term:
    ps = _Parser(text)
    t = ps.term()
    if ps.tok.kind != "eof":
        ps.error("unexpected trailing input")
    return t


# --------------------------------------------------------------- printer
_TERM_PREC = {Add: 1, Sub: 1, Mul: 2, Neg: 3, Pow: 4}
_FORM_PREC = {Implies: 1, Or: 2, And: 3, Not: 4, Eq: 5}


def term_to_text(t: Term, prec: int = 0) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, IntLit):
        return str(t.value)
    if isinstance(t, Param):
        return "$" + t.name
    if isinstance(t, Sigma):
        head = "s" if t.power == 1 else f"s^{t.power}"
        return f"{head}({term_to_text(t.arg)})"
    if isinstance(t, FrobLit):
        head = "frob" if t.e == 1 else f"frob^{t.e}"
        return f"{head}({term_to_text(t.arg)})"
    my = _TERM_PREC[type(t)]
    if isinstance(t, Neg):
        s = "-" + term_to_text(t.arg, my)
    elif isinstance(t, Pow):
        s = f"{term_to_text(t.base, 5)}^{t.exp}"
    else:
        op = {Add: " + ", Sub: " - ", Mul: "*"}[type(t)]
        s = term_to_text(t.left, my) + op + term_to_text(t.right, my + 1)
    return f"({s})" if my < prec else s


def to_text(f: Formula, prec: int = 0) -> str:
    if isinstance(f, Eq):
        return f"{term_to_text(f.left)} = {term_to_text(f.right)}"
    if isinstance(f, QUANTIFIERS):
        q = "E" if isinstance(f, Exists) else "A"
        s = f"{q} {f.var}. {to_text(f.body)}"
        return f"({s})" if prec > 0 else s
    if isinstance(f, Not):
        return f"!({to_text(f.arg)})"
    my = _FORM_PREC[type(f)]
    op = {And: " & ", Or: " | ", Implies: " -> "}[type(f)]
    if isinstance(f, Implies):
        s = to_text(f.left, my + 1) + op + to_text(f.right, my)
    else:
        s = to_text(f.left, my) + op + to_text(f.right, my + 1)
    return f"({s})" if my < prec else s


def ring_text(f: Formula, p: int) -> str:
    """Human display with ``t^{p^e}`` written out, e.g. ``x^{3} = x``."""
    def term(t: Term, prec: int = 0) -> str:
        if isinstance(t, FrobLit):
            e, arg = t.e, t.arg
            while isinstance(arg, FrobLit):  # (t^a)^b shown as one power
                e, arg = e + arg.e, arg.arg
            return f"{term(arg, 5)}^{{{p ** e}}}"
        if isinstance(t, (Var, IntLit, Param, Sigma)):
            return term_to_text(t)
        my = _TERM_PREC[type(t)]
        if isinstance(t, Neg):
            s = "-" + term(t.arg, my)
        elif isinstance(t, Pow):
            s = f"{term(t.base, 5)}^{t.exp}"
        else:
            op = {Add: " + ", Sub: " - ", Mul: "*"}[type(t)]
            s = term(t.left, my) + op + term(t.right, my + 1)
        return f"({s})" if my < prec else s

    def form(g: Formula, prec: int = 0) -> str:
        if isinstance(g, Eq):
            return f"{term(g.left)} = {term(g.right)}"
        if isinstance(g, QUANTIFIERS):
            s = f"{'E' if isinstance(g, Exists) else 'A'} {g.var}. {form(g.body)}"
            return f"({s})" if prec > 0 else s
        if isinstance(g, Not):
            return f"!({form(g.arg)})"
        my = _FORM_PREC[type(g)]
        op = {And: " & ", Or: " | ", Implies: " -> "}[type(g)]
        if isinstance(g, Implies):
            s = form(g.left, my + 1) + op + form(g.right, my)
        else:
            s = form(g.left, my) + op + form(g.right, my + 1)
        return f"({s})" if my < prec else s

    return form(f)


# ------------------------------------------------------------ traversals
def term_children(t: Term) -> tuple:
    if isinstance(t, TERM_BINARY):
        return (t.left, t.right)
    if isinstance(t, (Neg, Sigma, FrobLit)):
        return (t.arg,)
    if isinstance(t, Pow):
        return (t.base,)
    return ()


def _term_leaves(t: Term) -> Iterator[Term]:
    kids = term_children(t)
    if not kids:
        yield t
    for c in kids:
        yield from _term_leaves(c)


def free_vars(f: Formula) -> list[str]:
    """Free variables in first-occurrence (left-to-right) order."""
    out: list[str] = []

    def walk(g: Formula, bound: frozenset):
        if isinstance(g, Eq):
            for side in (g.left, g.right):
                for leaf in _term_leaves(side):
                    if isinstance(leaf, Var) and leaf.name not in bound and leaf.name not in out:
                        out.append(leaf.name)
        elif isinstance(g, QUANTIFIERS):
            walk(g.body, bound | {g.var})
        elif isinstance(g, Not):
            walk(g.arg, bound)
        else:
            walk(g.left, bound)
            walk(g.right, bound)

    walk(f, frozenset())
    return out


def params_of(f: Formula) -> list[str]:
    out: list[str] = []
    for t in _all_terms(f):
        for leaf in _term_leaves(t):
            if isinstance(leaf, Param) and leaf.name not in out:
                out.append(leaf.name)
    return out


def _all_terms(f: Formula) -> Iterator[Term]:
    if isinstance(f, Eq):
        yield f.left
        yield f.right
    elif isinstance(f, QUANTIFIERS):
        yield from _all_terms(f.body)
    elif isinstance(f, Not):
        yield from _all_terms(f.arg)
    else:
        yield from _all_terms(f.left)
        yield from _all_terms(f.right)


def bound_vars(f: Formula) -> list[str]:
    out: list[str] = []
    for g in _subformulas(f):
        if isinstance(g, QUANTIFIERS) and g.var not in out:
            out.append(g.var)
    return out


def _subformulas(f: Formula) -> Iterator[Formula]:
    yield f
    if isinstance(f, QUANTIFIERS):
        yield from _subformulas(f.body)
    elif isinstance(f, Not):
        yield from _subformulas(f.arg)
    elif isinstance(f, CONNECTIVES):
        yield from _subformulas(f.left)
        yield from _subformulas(f.right)


def quantifier_depth(f: Formula) -> int:
    if isinstance(f, Eq):
        return 0
    if isinstance(f, QUANTIFIERS):
        return 1 + quantifier_depth(f.body)
    if isinstance(f, Not):
        return quantifier_depth(f.arg)
    return max(quantifier_depth(f.left), quantifier_depth(f.right))


def has_sigma(f: Formula) -> bool:
    return any(isinstance(n, Sigma) for t in _all_terms(f) for n in _term_nodes(t))


def _term_nodes(t: Term) -> Iterator[Term]:
    yield t
    for c in term_children(t):
        yield from _term_nodes(c)


def check_alpha(f: Formula) -> None:
    """Reject a quantifier that rebinds an enclosing bound name or a free name."""
    free = set(free_vars(f))

    def walk(g: Formula, bound: frozenset):
        if isinstance(g, QUANTIFIERS):
            if g.var in bound:
                raise ShadowedVariable(f"quantifier rebinds '{g.var}' inside its own scope")
            if g.var in free:
                raise ShadowedVariable(f"'{g.var}' occurs both free and bound")
            walk(g.body, bound | {g.var})
        elif isinstance(g, Not):
            walk(g.arg, bound)
        elif isinstance(g, CONNECTIVES):
            walk(g.left, bound)
            walk(g.right, bound)

    walk(f, frozenset())


def validate(f: Formula, param_env: Mapping | None = None) -> None:
    check_alpha(f)
    env = param_env or {}
    for name in params_of(f):
        if name not in env:
            raise MissingParam(f"parameter '{name}' has no binding")


# ------------------------------------------------------------ rewriting
def map_terms(f: Formula, fn) -> Formula:
    if isinstance(f, Eq):
        return Eq(fn(f.left), fn(f.right))
    if isinstance(f, QUANTIFIERS):
        return type(f)(f.var, map_terms(f.body, fn))
    if isinstance(f, Not):
        return Not(map_terms(f.arg, fn))
    return type(f)(map_terms(f.left, fn), map_terms(f.right, fn))


def _rewrite_term(t: Term, leaf_fn, node_fn=None) -> Term:
    if node_fn is not None:
        r = node_fn(t)
        if r is not None:
            return r
    if isinstance(t, TERM_BINARY):
        return type(t)(_rewrite_term(t.left, leaf_fn, node_fn), _rewrite_term(t.right, leaf_fn, node_fn))
    if isinstance(t, Neg):
        return Neg(_rewrite_term(t.arg, leaf_fn, node_fn))
    if isinstance(t, Pow):
        return Pow(_rewrite_term(t.base, leaf_fn, node_fn), t.exp)
    if isinstance(t, Sigma):
        return Sigma(t.power, _rewrite_term(t.arg, leaf_fn, node_fn))
    if isinstance(t, FrobLit):
        return FrobLit(_rewrite_term(t.arg, leaf_fn, node_fn), t.e)
    return leaf_fn(t)


def bind_params(f: Formula, names) -> Formula:
    """Turn free occurrences of the given variable names into Param nodes."""
    names = set(names) & set(free_vars(f))
    if not names:
        return f

    def go(g: Formula, bound: frozenset) -> Formula:
        if isinstance(g, Eq):
            leaf = lambda t: Param(t.name) if isinstance(t, Var) and t.name in names and t.name not in bound else t
            return Eq(_rewrite_term(g.left, leaf), _rewrite_term(g.right, leaf))
        if isinstance(g, QUANTIFIERS):
            return type(g)(g.var, go(g.body, bound | {g.var}))
        if isinstance(g, Not):
            return Not(go(g.arg, bound))
        return type(g)(go(g.left, bound), go(g.right, bound))

    return go(f, frozenset())


def specialize_term(t: Term, m: int) -> Term:
    def node(n):
        if isinstance(n, Sigma):
            return FrobLit(specialize_term(n.arg, m), n.power * m)
        return None

    return _rewrite_term(t, lambda leaf: leaf, node)


def specialize(f: Formula, p: int, m: int = 1) -> Formula:
    """Replace every sigma^j(t) by t^(p^(j*m)), keeping the AST shape otherwise.

    The exponent is stored as e = j*m inside FrobLit; the characteristic p is
    implicit in the field the ring formula is later evaluated in.
    """
    if m < 0:
        raise PreconditionError("Frobenius power must be >= 0")
    return map_terms(f, lambda t: specialize_term(t, m))


# ------------------------------------------------------ random formulas
def random_term(rng, names: list[str], depth: int, sigma: bool = True, params: list[str] | None = None) -> Term:
    if depth <= 1 or rng.random() < 0.3:
        r = rng.random()
        if params and r < 0.1:
            return Param(rng.choice(params))
        if r < 0.75 and names:
            return Var(rng.choice(names))
        return IntLit(rng.randrange(0, 4))
    kinds = ["add", "sub", "mul", "mul", "neg", "pow"] + (["sigma", "sigma"] if sigma else [])
    kind = rng.choice(kinds)
    sub = lambda: random_term(rng, names, depth - 1, sigma, params)
    if kind == "add":
        return Add(sub(), sub())
    if kind == "sub":
        return Sub(sub(), sub())
    if kind == "mul":
        return Mul(sub(), sub())
    if kind == "neg":
        return Neg(sub())
    if kind == "pow":
        return Pow(sub(), rng.randrange(0, 4))
    return Sigma(rng.choice([1, 1, 2]), sub())


def random_formula(rng, free: list[str], bindable: list[str], depth: int = 5,
                   sigma: bool = True, max_quantifiers: int | None = None,
                   params: list[str] | None = None) -> Formula:
    """Random alpha-valid formula over ``free`` variables.

    Quantifiers only bind names from ``bindable`` (disjoint from ``free``), never
    one already in scope, so the result always passes ``check_alpha``.  ``depth``
    bounds the combined formula/term nesting.
    """
    budget = len(bindable) if max_quantifiers is None else max_quantifiers

    def form(d: int, scope: list[str], qleft: int) -> Formula:
        avail = [v for v in bindable if v not in scope]
        r = rng.random()
        if d <= 2 or r < 0.3:
            tdepth = max(1, d - 1)
            return Eq(random_term(rng, scope, tdepth, sigma, params), random_term(rng, scope, tdepth, sigma, params))
        if r < 0.5 and avail and qleft > 0:
            v = rng.choice(avail)
            cls = Exists if rng.random() < 0.5 else Forall
            return cls(v, form(d - 1, scope + [v], qleft - 1))
        if r < 0.6:
            return Not(form(d - 1, scope, qleft))
        cls = rng.choice([And, And, Or, Or, Implies])
        return cls(form(d - 1, scope, qleft), form(d - 1, scope, qleft))

    return form(depth, list(free), budget)
