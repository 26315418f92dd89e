"""Univariate difference polynomials and their Frobenius specializations."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import polynomial as P
from .counting import count
from .errors import BudgetExceeded, Inconclusive, PreconditionError
from .field import TABLE_LIMIT, FieldCtx, make_field
from .formula import (
    Add, Eq, Formula, FrobLit, IntLit, Mul, Neg, Param, ParamSpec, Pow, Sigma, Sub, Term, Var,
    free_vars, parse_term, quantifier_depth, term_to_text,
)

# exponent vector (e_0, ..., e_r) stands for x^e_0 (s x)^e_1 ... (s^r x)^e_r
Monomial = tuple[int, ...]

SCAN_LIMIT = TABLE_LIMIT
CLOSURE_LIMIT = 1 << 14


def _norm(mono: Monomial) -> Monomial:
    mono = tuple(mono)
    while mono and mono[-1] == 0:
        mono = mono[:-1]
    return mono


@dataclass(frozen=True)
class DiffPoly:
    p: int
    terms: tuple[tuple[Monomial, int], ...]  # sorted, nonzero coefficients
    var: str = "x"

    @staticmethod
    def from_dict(p: int, d: Mapping[Monomial, int], var: str = "x") -> "DiffPoly":
        clean = {}
        for mono, c in d.items():
            c %= p
            if c:
                key = _norm(mono)
                clean[key] = (clean.get(key, 0) + c) % p
        items = tuple(sorted((k, v) for k, v in clean.items() if v))
        if not items:
            raise PreconditionError("the zero difference polynomial is not allowed")
        return DiffPoly(p, items, var)

    @property
    def order(self) -> int:
        return max(max(len(m) - 1, 0) for m, _ in self.terms)

    @property
    def total_degree(self) -> int:
        return max(sum(m) for m, _ in self.terms)

    def term(self) -> Term:
        """The polynomial as a formula term in its variable."""
        x = Var(self.var)
        out = None
        for mono, c in sorted(self.terms, key=lambda mc: (-len(mc[0]), [-e for e in mc[0][::-1]])):
            negative = self.p > 2 and c == self.p - 1
            c = 1 if negative else c
            factors: list[Term] = [] if c == 1 else [IntLit(c)]
            for j, e in enumerate(mono):
                if e:
                    base = x if j == 0 else Sigma(j, x)
                    factors.append(base if e == 1 else Pow(base, e))
            t = factors[0] if factors else IntLit(1)
            for f in factors[1:]:
                t = Mul(t, f)
            if out is None:
                out = Neg(t) if negative else t
            else:
                out = Sub(out, t) if negative else Add(out, t)
        return out

    def equation(self) -> Formula:
        return Eq(self.term(), IntLit(0))

    def __str__(self) -> str:
        return term_to_text(self.term())


# --------------------------------------------------------------- parsing
def _poly_add(a: dict, b: dict, p: int, sign: int = 1) -> dict:
    out = dict(a)
    for m, c in b.items():
        out[m] = (out.get(m, 0) + sign * c) % p
    return {m: c for m, c in out.items() if c}


def _poly_mul(a: dict, b: dict, p: int) -> dict:
    out: dict = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            n = max(len(ma), len(mb))
            m = _norm(tuple((ma[i] if i < len(ma) else 0) + (mb[i] if i < len(mb) else 0) for i in range(n)))
            out[m] = (out.get(m, 0) + ca * cb) % p
    return {m: c for m, c in out.items() if c}


def _poly_shift(a: dict, j: int) -> dict:
    # sigma^j fixes prime-field coefficients and moves s^i x to s^(i+j) x
    return {_norm((0,) * j + m) if m else (): c for m, c in a.items()}


def _from_term(t: Term, p: int, params: Mapping, names: set) -> dict:
    if isinstance(t, Var) and t.name in params:
        t = Param(t.name)
    if isinstance(t, Var):
        names.add(t.name)
        return {(1,): 1}
    if isinstance(t, IntLit):
        return {(): t.value % p} if t.value % p else {}
    if isinstance(t, Param):
        spec = params.get(t.name)
        if spec is None:
            raise PreconditionError(f"parameter '{t.name}' has no binding")
        if isinstance(spec, ParamSpec):
            if spec.kind != "int":
                raise PreconditionError("difference polynomial coefficients must lie in the prime field")
            v = spec.value
        else:
            v = int(spec)
        return {(): v % p} if v % p else {}
    if isinstance(t, Add):
        return _poly_add(_from_term(t.left, p, params, names), _from_term(t.right, p, params, names), p)
    if isinstance(t, Sub):
        return _poly_add(_from_term(t.left, p, params, names), _from_term(t.right, p, params, names), p, -1)
    if isinstance(t, Neg):
        return {m: (-c) % p for m, c in _from_term(t.arg, p, params, names).items()}
    if isinstance(t, Mul):
        return _poly_mul(_from_term(t.left, p, params, names), _from_term(t.right, p, params, names), p)
    if isinstance(t, Pow):
        base = _from_term(t.base, p, params, names)
        out = {(): 1}
        for _ in range(t.exp):
            out = _poly_mul(out, base, p)
        return out
    if isinstance(t, Sigma):
        return _poly_shift(_from_term(t.arg, p, params, names), t.power)
    if isinstance(t, FrobLit):
        raise PreconditionError("frob(...) is a ring term; write s(...) in a difference polynomial")
    raise TypeError(f"not a term: {t!r}")


def diffpoly_from_term(t: Term, p: int, params: Mapping | None = None) -> DiffPoly:
    names: set = set()
    d = _from_term(t, p, params or {}, names)
    if len(names) > 1:
        raise PreconditionError(f"a difference polynomial has one variable, found {sorted(names)}")
    return DiffPoly.from_dict(p, d, names.pop() if names else "x")


def parse_diffpoly(text: str, p: int, params: Mapping | None = None) -> DiffPoly:
    """Parse e.g. ``s(x) - x^2`` (the formula term grammar)."""
    return diffpoly_from_term(parse_term(text), p, params)


# -------------------------------------------------------- specialization
def sigma_specialize(f: DiffPoly, p: int | None = None, m_frob: int = 1) -> list[int]:
    """Ring polynomial with every s^j x replaced by x^(p^(j*m_frob)), little-endian."""
    p = f.p if p is None else p
    if p != f.p:
        raise PreconditionError(f"polynomial lives over F_{f.p}, not F_{p}")
    if m_frob < 0:
        raise PreconditionError("Frobenius power must be >= 0")
    sparse: dict[int, int] = {}
    for mono, c in f.terms:
        e = sum(ej * p ** (j * m_frob) for j, ej in enumerate(mono))
        sparse[e] = (sparse.get(e, 0) + c) % p
    if not sparse:
        return []
    dense = [0] * (max(sparse) + 1)
    for e, c in sparse.items():
        dense[e] = c
    return P.trim(dense, p)


def _poly_values(ctx: FieldCtx, g: list[int], xs: np.ndarray) -> np.ndarray:
    acc = np.zeros(xs.shape, dtype=ctx.dtype)
    for e, c in enumerate(g):
        if c:
            acc = ctx.vadd(acc, ctx.vmul(ctx.vpow(xs, e), np.int64(c)))
    return acc


def count_roots(ctx: FieldCtx, g: list[int]) -> int:
    """Distinct roots of an F_p polynomial inside GF(p^k)."""
    if not g:
        return ctx.q
    if ctx.q <= SCAN_LIMIT:
        total = 0
        step = 1 << 18
        for s in range(0, ctx.q, step):
            xs = np.arange(s, min(s + step, ctx.q), dtype=np.int64)
            total += int(np.count_nonzero(_poly_values(ctx, g, xs) == 0))
        return total
    return P.count_roots_in_extension(g, ctx.p, ctx.k)


@dataclass(frozen=True)
class StabilityReport:
    poly: str
    p: int
    m_frob: int
    degree: int
    counts: tuple[tuple[int, int], ...]  # (k, roots)
    bounded: bool
    constant: bool
    crosscheck: tuple[tuple[int, int], ...] | None = None  # (k, engine count)

    @property
    def verdict(self) -> str:
        return "bounded" if self.bounded else "growing"

    def to_dict(self) -> dict:
        out = {"poly": self.poly, "p": self.p, "m": self.m_frob, "degree": self.degree,
               "counts": [{"k": k, "roots": c} for k, c in self.counts],
               "bounded": self.bounded, "constant": self.constant, "verdict": self.verdict}
        if self.crosscheck is not None:
            out["engine_counts"] = [{"k": k, "count": c} for k, c in self.crosscheck]
            out["crosscheck_ok"] = self.crosscheck_ok
        return out

    @property
    def crosscheck_ok(self) -> bool | None:
        if self.crosscheck is None:
            return None
        return dict(self.counts) == dict(self.crosscheck)


def root_count_stability(f: DiffPoly, p: int, m_frob: int, schedule: Sequence[int], *,
                         crosscheck_limit: int = 1 << 16, workers: int = 1) -> StabilityReport:
    """Root counts of the specialization along a k-schedule.

    Where q <= crosscheck_limit the count is repeated through the formula
    engine on ``f = 0`` with the Frobenius action, an independent route.
    """
    schedule = [int(k) for k in schedule]
    if not schedule or any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise PreconditionError("schedule must be nonempty and strictly increasing")
    g = sigma_specialize(f, p, m_frob)
    counts, engine = [], []
    eq = f.equation()
    for k in schedule:
        ctx = make_field(p, k, m_frob)
        counts.append((k, count_roots(ctx, g)))
        if ctx.q <= crosscheck_limit:
            engine.append((k, count(ctx, eq, workers=workers).count))
    deg = P.degree(g)
    values = [c for _, c in counts]
    bounded = max(values) <= max(deg, 0) and (len(values) < 2 or values[-1] <= max(values[:-1]))
    return StabilityReport(str(f), p, m_frob, deg, tuple(counts), bounded,
                           len(set(values)) == 1, tuple(engine) if engine else None)


# ----------------------------------------------------------------- torus
@dataclass(frozen=True)
class TorusReport:
    p: int
    k: int
    index: int
    kernel: int
    subgroup: int
    closed: bool | None  # None when q is above the exhaustive-closure limit
    normalized: float

    def to_dict(self) -> dict:
        return {"p": self.p, "k": self.k, "index": self.index, "kernel": self.kernel,
                "subgroup": self.subgroup, "closed": self.closed, "normalized": self.normalized}


def _closure_ok(ctx: FieldCtx, members: np.ndarray) -> bool:
    mask = np.zeros(ctx.q, dtype=bool)
    mask[members] = True
    if not mask[1]:
        return False
    if not mask[np.asarray(ctx.vinv(members), dtype=np.int64)].all():
        return False
    rows = max(1, (1 << 22) // len(members))
    for i in range(0, len(members), rows):
        prod = ctx.vmul(members[i:i + rows, None], members[None, :])
        if not mask[np.asarray(prod, dtype=np.int64)].all():
            return False
    return True


def torus_subgroup(ctx: FieldCtx) -> TorusReport:
    """Image T of x -> x^(-1) * sigma(x) on the unit group, with its index."""
    if ctx.m != 1:
        raise PreconditionError("the torus example uses sigma = x^p (m = 1)")
    if ctx.q > SCAN_LIMIT:
        raise BudgetExceeded(ctx.q, SCAN_LIMIT, "torus scan")
    units = np.arange(1, ctx.q, dtype=np.int64)
    image = ctx.vmul(ctx.vinv(units), ctx.vfrob(units, 1))
    members = np.unique(np.asarray(image, dtype=np.int64))
    kernel = int(np.count_nonzero(np.asarray(image) == 1))
    size = len(members)
    if (ctx.q - 1) % size:
        raise AssertionError("image size does not divide the group order")
    closed = _closure_ok(ctx, members) if ctx.q <= CLOSURE_LIMIT else None
    normalized = math.log(size) / math.log(ctx.q)
    return TorusReport(ctx.p, ctx.k, (ctx.q - 1) // size, kernel, size, closed, normalized)


# ----------------------------------------------------------------- probe
FINITE = "finite-sigma-degree-consistent"
DIM_ONE = "dimension-1-consistent"


@dataclass(frozen=True)
class ProbeReport:
    verdict: str
    per_k: tuple[tuple[int, int, float], ...]  # (k, count, log count / log q)

    def to_dict(self) -> dict:
        return {"verdict": self.verdict,
                "per_k": [{"k": k, "count": c, "ratio": r} for k, c, r in self.per_k]}


def sigma_degree_probe(phi: Formula, p: int, m_frob: int, schedule: Sequence[int],
                       params: Mapping | None = None, *, workers: int = 1,
                       budget: int | None = None) -> ProbeReport:
    """Classify a one-variable quantifier-free set by its count trend.

    The verdicts only say which behaviour the counts are consistent with.
    """
    if quantifier_depth(phi) != 0:
        raise PreconditionError("the probe takes a quantifier-free formula")
    if len(free_vars(phi)) != 1:
        raise PreconditionError("the probe takes a formula in one free variable")
    schedule = [int(k) for k in schedule]
    if not schedule or any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise PreconditionError("schedule must be nonempty and strictly increasing")
    rows = []
    for k in schedule:
        ctx = make_field(p, k, m_frob)
        c = count(ctx, phi, params, workers=workers, budget=budget).count
        rows.append((k, c, math.log(c) / math.log(ctx.q) if c else 0.0))
    r = [row[2] for row in rows]
    last = r[-1]
    down = len(r) < 2 or r[-1] <= r[-2]
    up = len(r) < 2 or r[-1] >= r[-2]
    if last < 0.2 and down:
        verdict = FINITE
    elif last > 0.8 and up:
        verdict = DIM_ONE
    else:
        raise Inconclusive(f"ratios {[round(v, 4) for v in r]} show no settled trend")
    return ProbeReport(verdict, tuple(rows))
