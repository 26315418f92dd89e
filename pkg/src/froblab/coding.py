"""Residue coding of finite sets and the combinatorial constructions built on it.

A field element y codes the subset {a in A : a + y is a square} of a small
set A.  Everything else in this module (Paley counts, pair/triple injections,
grids, chains, truncated arithmetic, the fixed-field experiment) is assembled
from that one primitive and checked by decoding, never by trusting a search.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (
    BadCharacteristic, BudgetExceeded, CharTwo, CodingFailed, DuplicateElements,
    FixedFieldMismatch, FixedFieldTooSmall, NoInjector, PreconditionError, TuplesExhausted,
)
from .field import FieldCtx, GFElem, fixed_field_size, fixed_indices

KINDS = ("square", "cube", "paley")


# -------------------------------------------------------------- results
@dataclass(frozen=True)
class CodingCertificate:
    code: GFElem
    A: tuple[GFElem, ...]
    E: tuple[GFElem, ...]
    kind: str
    verified: bool
    search_range: int

    def to_dict(self) -> dict:
        return {
            "found": True,
            "code": self.code.index,
            "A": [a.index for a in self.A],
            "E": [e.index for e in self.E],
            "kind": self.kind,
            "verified": self.verified,
            "search_range": self.search_range,
        }


@dataclass(frozen=True)
class NotFound:
    A: tuple[GFElem, ...]
    E: tuple[GFElem, ...]
    kind: str
    search_range: int

    verified = False

    def to_dict(self) -> dict:
        return {
            "found": False,
            "A": [a.index for a in self.A],
            "E": [e.index for e in self.E],
            "kind": self.kind,
            "search_range": self.search_range,
        }


def _indices(ctx: FieldCtx, xs: Iterable) -> list[int]:
    return [ctx.index_of(x) for x in xs]


def _distinct(ctx: FieldCtx, xs: Iterable, what: str = "A") -> list[int]:
    idx = _indices(ctx, xs)
    if len(set(idx)) != len(idx):
        raise DuplicateElements(f"{what} has repeated elements")
    return idx


def _subset(a_idx: list[int], e_idx: list[int]) -> None:
    if len(set(e_idx)) != len(e_idx):
        raise DuplicateElements("E has repeated elements")
    extra = set(e_idx) - set(a_idx)
    if extra:
        raise PreconditionError(f"E is not a subset of A (extra indices {sorted(extra)})")


# ---------------------------------------------------- residue membership
def _euler(ctx: FieldCtx, a: int, d: int) -> bool:
    """a is a d-th power, decided by a^((q-1)/d) with scalar arithmetic."""
    if a == 0 or (ctx.q - 1) % d:
        return True
    return ctx.pow(a, (ctx.q - 1) // d) == 1


def _member_scalar(ctx: FieldCtx, kind: str, a: int, y: int) -> bool:
    """Decoding rule: a in set(y) iff a + y is a square (cube); 0 counts as one."""
    s = ctx.add(a, y)
    return _euler(ctx, s, 2 if kind == "square" else 3)


def decode(ctx: FieldCtx, y, A: Sequence, kind: str = "square") -> list[GFElem]:
    """Members of A coded by y, recomputed from scratch."""
    yi = ctx.index_of(y)
    if kind == "paley":
        return [GFElem(ctx, a) for a in _indices(ctx, A) if paley_adjacent(ctx, yi, a)]
    return [GFElem(ctx, a) for a in _indices(ctx, A) if _member_scalar(ctx, kind, a, yi)]


def paley_adjacent(ctx: FieldCtx, u: int, v: int) -> bool:
    d = ctx.sub(u, v)
    return d != 0 and _euler(ctx, d, 2)


def verify_certificate(cert: CodingCertificate) -> bool:
    """Re-check a certificate element by element, independent of the search."""
    ctx = cert.code.ctx
    y = cert.code.index
    a_idx = [a.index for a in cert.A]
    e_set = {e.index for e in cert.E}
    if cert.kind == "paley":
        if y in a_idx:
            return False
        return all(paley_adjacent(ctx, y, a) == (a in e_set) for a in a_idx)
    got = {a.index for a in decode(ctx, cert.code, cert.A, cert.kind)}
    if got != e_set:
        return False
    # excluded elements must give a nonzero non-residue
    return all(ctx.add(a, y) != 0 for a in a_idx if a not in e_set)


# ---------------------------------------------------------------- search
def _pattern_mask(ctx: FieldCtx, kind: str, a_idx: list[int], e_set: set[int], ys: np.ndarray) -> np.ndarray:
    ok = np.ones(len(ys), dtype=bool)
    pred = ctx.vis_square if kind == "square" else ctx.vis_cube
    for a in a_idx:
        s = ctx.vadd(ys, a)
        member = pred(s)
        if a in e_set:
            ok &= member
        else:
            ok &= ~member
        if not ok.any():
            break
    return ok


def _search(ctx: FieldCtx, mask_fn: Callable[[np.ndarray], np.ndarray], *, order: str = "canonical",
            seed: int = 0, workers: int = 1, max_scan: int | None = None) -> tuple[int | None, int]:
    """First candidate y (in the chosen order) with mask_fn true.

    Returns (y or None, number of candidates examined).  Blocks are handed out in
    waves; within a wave the earliest hit wins, so the answer does not depend on
    the number of workers.
    """
    q = ctx.q
    if order == "canonical":
        limit = q if max_scan is None else min(q, max_scan)
    elif order == "random":
        if max_scan is None:
            raise PreconditionError("random-order search needs max_scan")
        limit = max_scan
    else:
        raise PreconditionError(f"unknown search order {order!r}")
    rng = np.random.default_rng(seed) if order == "random" else None
    pos = 0
    block = 256
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while pos < limit:
            spans = []
            for _ in range(max(1, workers)):
                if pos >= limit:
                    break
                n = min(block, limit - pos)
                spans.append((pos, n))
                pos += n
            cands = []
            for start, n in spans:
                if rng is None:
                    cands.append(np.arange(start, start + n, dtype=np.int64))
                else:
                    cands.append(rng.integers(0, q, size=n, dtype=np.int64))
            cands = [c.astype(ctx.dtype, copy=False) for c in cands]
            masks = list(pool.map(mask_fn, cands)) if pool else [mask_fn(c) for c in cands]
            for (start, _), c, mk in zip(spans, cands, masks):
                hits = np.flatnonzero(mk)
                if hits.size:
                    return int(c[hits[0]]), start + int(hits[0]) + 1
            block = min(block * 2, 1 << 16)
        return None, pos
    finally:
        if pool:
            pool.shutdown()


def _code_subset(ctx: FieldCtx, A, E, kind: str, **search_kw):
    a_idx = _distinct(ctx, A)
    e_idx = _indices(ctx, E)
    _subset(a_idx, e_idx)
    e_set = set(e_idx)
    y, scanned = _search(ctx, lambda ys: _pattern_mask(ctx, kind, a_idx, e_set, ys), **search_kw)
    A_el = tuple(GFElem(ctx, a) for a in a_idx)
    E_el = tuple(GFElem(ctx, e) for e in e_idx)
    if y is None:
        return NotFound(A_el, E_el, kind, scanned)
    cert = CodingCertificate(GFElem(ctx, y), A_el, E_el, kind, False, scanned)
    return CodingCertificate(cert.code, A_el, E_el, kind, verify_certificate(cert), scanned)


def code_subset_square(ctx: FieldCtx, A, E, *, order: str = "canonical", seed: int = 0,
                       workers: int = 1, max_scan: int | None = None):
    """Least y (canonical order) with a + y a square exactly for a in E.

    Elements of A outside E must land on nonzero non-squares.
    """
    if ctx.p == 2:
        raise CharTwo("square coding needs odd characteristic")
    return _code_subset(ctx, A, E, "square", order=order, seed=seed, workers=workers, max_scan=max_scan)


def code_subset_cube(ctx: FieldCtx, A, E, *, order: str = "canonical", seed: int = 0,
                     workers: int = 1, max_scan: int | None = None):
    if ctx.p != 2:
        raise BadCharacteristic("cube coding is defined for characteristic 2")
    if (ctx.q - 1) % 3:
        raise BadCharacteristic(f"3 does not divide {ctx.q - 1}; every element of GF({ctx.q}) is a cube")
    return _code_subset(ctx, A, E, "cube", order=order, seed=seed, workers=workers, max_scan=max_scan)


# ----------------------------------------------------------------- Paley
@dataclass(frozen=True)
class PaleyResult:
    count: int
    m: int
    q: int
    deviation: float
    bound: float | None
    bound_ok: bool | None  # None when m = 0 (nothing to check)

    def to_dict(self) -> dict:
        return {"count": self.count, "m": self.m, "q": self.q, "deviation": self.deviation,
                "bound": self.bound, "bound_ok": self.bound_ok}


def paley_bound_holds(count_: int, m: int, q: int) -> bool:
    """| |V| - q/2^m | <= (m - 2 + 2^(1-m)) sqrt(q)/2 + m/2, decided in integers.

    Scaling by 2^m gives |2^m V - q| - m 2^(m-1) <= (2^(m-1)(m-2) + 1) sqrt(q).
    """
    if m < 1:
        raise PreconditionError("the bound needs |A| >= 1")
    lhs = abs((count_ << m) - q) - m * (1 << (m - 1))
    c = (1 << (m - 1)) * (m - 2) + 1
    if lhs <= 0:
        return True
    return c > 0 and lhs * lhs <= c * c * q


def _paley_mask(ctx: FieldCtx, a_idx: list[int], e_set: set[int], vs: np.ndarray) -> np.ndarray:
    ok = np.ones(len(vs), dtype=bool)
    for a in a_idx:
        ok &= vs != a
        d = ctx.vsub(vs, a)
        adj = (d != 0) & ctx.vis_square(d)
        ok &= adj if a in e_set else ~adj
    return ok


def _check_paley_field(ctx: FieldCtx) -> None:
    if ctx.p == 2 or ctx.q % 4 != 1:
        raise BadCharacteristic(f"Paley adjacency needs q = 1 mod 4, got q = {ctx.q}")


def paley_count(ctx: FieldCtx, A, E) -> PaleyResult:
    _check_paley_field(ctx)
    a_idx = _distinct(ctx, A)
    e_idx = _indices(ctx, E)
    _subset(a_idx, e_idx)
    e_set = set(e_idx)
    total = 0
    step = 1 << 20
    for s in range(0, ctx.q, step):
        vs = np.arange(s, min(s + step, ctx.q), dtype=np.int64).astype(ctx.dtype, copy=False)
        total += int(np.count_nonzero(_paley_mask(ctx, a_idx, e_set, vs)))
    m, q = len(a_idx), ctx.q
    dev = abs(total - q / 2 ** m)
    if m == 0:
        return PaleyResult(total, 0, q, dev, None, None)
    bound = 0.5 * (m - 2 + 2.0 ** (1 - m)) * math.sqrt(q) + m / 2
    return PaleyResult(total, m, q, dev, bound, paley_bound_holds(total, m, q))


def paley_code(ctx: FieldCtx, A, E, *, workers: int = 1):
    _check_paley_field(ctx)
    a_idx = _distinct(ctx, A)
    e_idx = _indices(ctx, E)
    _subset(a_idx, e_idx)
    e_set = set(e_idx)
    y, scanned = _search(ctx, lambda vs: _paley_mask(ctx, a_idx, e_set, vs), workers=workers)
    A_el = tuple(GFElem(ctx, a) for a in a_idx)
    E_el = tuple(GFElem(ctx, e) for e in e_idx)
    if y is None:
        return NotFound(A_el, E_el, "paley", scanned)
    cert = CodingCertificate(GFElem(ctx, y), A_el, E_el, "paley", False, scanned)
    return CodingCertificate(cert.code, A_el, E_el, "paley", verify_certificate(cert), scanned)


# ------------------------------------------------------------ injections
def _nonzero_differences(ctx: FieldCtx, xs: list[int]) -> set[int]:
    return {ctx.sub(a, b) for a in xs for b in xs if a != b}


def least_injector(ctx: FieldCtx, X: Sequence, Y: Sequence) -> int:
    """Least-index b != 0 making (x, y) -> x + b*y injective on X x Y.

    b must avoid every quotient (x1 - x2)/(y1 - y2) with y1 != y2.
    """
    xs, ys = _indices(ctx, X), _indices(ctx, Y)
    dx = {ctx.sub(a, b) for a in xs for b in xs}
    dy_inv = [ctx.inv(d) for d in _nonzero_differences(ctx, ys)]
    bad = {0} | {ctx.mul(a, b) for a in dx for b in dy_inv}
    if len(bad) >= ctx.q:
        raise NoInjector(f"every element of GF({ctx.q}) is a difference quotient")
    b = 1
    while b in bad:
        b += 1
    return b


def inject(ctx: FieldCtx, X: Sequence, Y: Sequence) -> tuple[GFElem, list[GFElem]]:
    b = least_injector(ctx, X, Y)
    xs, ys = _indices(ctx, X), _indices(ctx, Y)
    T = [ctx.add(x, ctx.mul(b, y)) for x in xs for y in ys]
    if len(set(T)) != len(xs) * len(ys):
        raise AssertionError("injector failed to separate pairs")
    return GFElem(ctx, b), [GFElem(ctx, t) for t in T]


def pair_inject(ctx: FieldCtx, Y: Sequence) -> tuple[GFElem, list[GFElem]]:
    """a with {y1 + a*y2} of size |Y|^2; T is listed in (y1, y2) lexicographic order."""
    _distinct(ctx, Y, "Y")
    return inject(ctx, Y, Y)


def triple_inject(ctx: FieldCtx, Y: Sequence) -> tuple[GFElem, GFElem, list[GFElem]]:
    """Iterated injection: (y1, y2, y3) -> (y1 + a*y2) + b*y3."""
    a, T2 = pair_inject(ctx, Y)
    b, T3 = inject(ctx, T2, Y)
    return a, b, T3


# --------------------------------------------------------------- measure
@dataclass(frozen=True)
class MeasureStats:
    n: int
    q: int
    trials: int
    counts: tuple[int, ...]
    deviations: tuple[float, ...]  # |count - q/2^n| / sqrt(q)
    max_dev: float
    theoretical_bound: float
    precondition_ok: bool  # q > 2(r+1) l^2 with r = 1

    @property
    def within_bound(self) -> bool:
        return self.max_dev <= self.theoretical_bound

    def to_dict(self) -> dict:
        return {"n": self.n, "q": self.q, "trials": self.trials, "counts": list(self.counts),
                "deviations": list(self.deviations), "max_dev": self.max_dev,
                "theoretical_bound": self.theoretical_bound,
                "precondition_ok": self.precondition_ok, "within_bound": self.within_bound}


def counting_constant(ell: int, q: int) -> float:
    """Deviation bound, in units of sqrt(q), for a curve-count split 1/ell ways."""
    return ((ell - 1) * (ell - 2) + 5 * ell ** (13 / 3) / math.sqrt(q)) / ell


def _square_table(ctx: FieldCtx) -> np.ndarray:
    out = np.empty(ctx.q, dtype=bool)
    step = 1 << 20
    for s in range(0, ctx.q, step):
        out[s:s + step] = ctx.vis_square(np.arange(s, min(s + step, ctx.q), dtype=np.int64))
    return out


def _measure_mask(ctx: FieldCtx, sq: np.ndarray, bs: Sequence[int], xs: np.ndarray) -> np.ndarray:
    ok = sq[np.asarray(ctx.vadd(xs, bs[0]), dtype=np.int64)]
    for b in bs[1:]:
        ok = ok & ~sq[np.asarray(ctx.vadd(xs, b), dtype=np.int64)]
    return ok


def measure_count(ctx: FieldCtx, bs: Sequence) -> int:
    """#{x : x + b1 is a square and x + bi is not, for i >= 2}."""
    if ctx.p == 2:
        raise CharTwo("square coding needs odd characteristic")
    b = _indices(ctx, bs)
    if ctx.q > (1 << 26):
        raise BudgetExceeded(ctx.q, 1 << 26)
    sq = _square_table(ctx)
    return int(np.count_nonzero(_measure_mask(ctx, sq, b, np.arange(ctx.q, dtype=np.int64))))


def measure_experiment(ctx: FieldCtx, n: int, trials: int, seed: int = 0) -> MeasureStats:
    if ctx.p == 2:
        raise CharTwo("square coding needs odd characteristic")
    if n < 1:
        raise PreconditionError("n must be >= 1")
    if ctx.q < n:
        raise TuplesExhausted(f"GF({ctx.q}) has fewer than {n} distinct elements")
    if ctx.q > (1 << 26):
        raise BudgetExceeded(ctx.q, 1 << 26)
    rng = np.random.default_rng(seed)
    sq = _square_table(ctx)
    xs = np.arange(ctx.q, dtype=np.int64)
    counts, devs = [], []
    for _ in range(trials):
        bs = [int(b) for b in rng.choice(ctx.q, size=n, replace=False)]
        c = int(np.count_nonzero(_measure_mask(ctx, sq, bs, xs)))
        counts.append(c)
        devs.append(abs(c - ctx.q / 2 ** n) / math.sqrt(ctx.q))
    ell = 2 ** n
    return MeasureStats(n, ctx.q, trials, tuple(counts), tuple(devs), max(devs, default=0.0),
                        counting_constant(ell, ctx.q), ctx.q > 4 * ell * ell)


def codable_fraction(ctx: FieldCtx, m: int, pairs: int, seed: int = 0) -> float:
    """Share of random (A, E), |A| = m, that the square coder can realize."""
    rng = np.random.default_rng(seed)
    if ctx.q < m:
        raise TuplesExhausted(f"GF({ctx.q}) has fewer than {m} elements")
    ok = 0
    for _ in range(pairs):
        A = [int(a) for a in rng.choice(ctx.q, size=m, replace=False)]
        E = [a for a in A if rng.random() < 0.5]
        if isinstance(code_subset_square(ctx, A, E), CodingCertificate):
            ok += 1
    return ok / pairs if pairs else 0.0


def empirical_threshold(m: int, primes: Iterable[int], sets: int = 20, seed: int = 0) -> int | None:
    """Least prime q in ``primes`` at which every subset of each seeded m-set is codable.

    Only odd primes are tried, in increasing order; None if none qualifies.
    """
    from .field import make_field

    for q in sorted(int(q) for q in primes):
        if q == 2 or q < m:
            continue
        ctx = make_field(q)
        rng = np.random.default_rng([seed, q])
        good = True
        for _ in range(sets):
            A = [int(a) for a in rng.choice(q, size=m, replace=False)]
            if not all(isinstance(code_subset_square(ctx, A, E), CodingCertificate) for E in all_subsets(A)):
                good = False
                break
        if good:
            return q
    return None


def all_subsets(A: Sequence) -> list[list]:
    return [[a for a, bit in zip(A, bits) if bit] for bits in itertools.product((0, 1), repeat=len(A))]


# ------------------------------------------------------------ TP2, chain
@dataclass(frozen=True)
class TP2Witness:
    n: int
    A: tuple[GFElem, ...]
    grid: tuple[tuple[CodingCertificate, ...], ...]
    rows_inconsistent: tuple[bool, ...]
    paths_consistent: int
    paths_total: int

    @property
    def verified(self) -> bool:
        return (all(c.verified for row in self.grid for c in row)
                and all(self.rows_inconsistent) and self.paths_consistent == self.paths_total)

    def to_dict(self) -> dict:
        return {"n": self.n, "A": [a.index for a in self.A],
                "codes": [[c.code.index for c in row] for row in self.grid],
                "rows_inconsistent": list(self.rows_inconsistent),
                "paths_consistent": self.paths_consistent, "paths_total": self.paths_total,
                "verified": self.verified}


def _eta(t: int, n: int) -> tuple[int, ...]:
    """t-th function {0..n-1} -> {0..n-1}, as its base-n digits."""
    return tuple((t // n ** i) % n for i in range(n))


def tp2_witness(ctx: FieldCtx, n: int, *, workers: int = 1) -> TP2Witness:
    if n < 1:
        raise PreconditionError("n must be >= 1")
    if ctx.p == 2:
        raise CharTwo("square coding needs odd characteristic")
    size = n ** n
    if fixed_field_size(ctx, 1) < size:
        raise FixedFieldTooSmall(f"Fix(sigma) has {fixed_field_size(ctx, 1)} < {size} elements")
    A = fixed_indices(ctx, 1)[:size]
    funcs = [_eta(t, n) for t in range(size)]
    grid = []
    for i in range(n):
        row = []
        for j in range(n):
            B = [A[t] for t in range(size) if funcs[t][i] == j]
            cert = code_subset_square(ctx, A, B, workers=workers)
            if not isinstance(cert, CodingCertificate) or not cert.verified:
                raise CodingFailed(f"cell ({i}, {j}) could not be coded")
            row.append(cert)
        grid.append(tuple(row))
    # verification works from decoded sets only
    decoded = [[{e.index for e in decode(ctx, c.code, c.A)} for c in row] for row in grid]
    full = set(A)
    rows = []
    for i in range(n):
        cells = decoded[i]
        disjoint = all(not (cells[a] & cells[b]) for a in range(n) for b in range(a + 1, n))
        rows.append(disjoint and set().union(*cells) == full)
    consistent = 0
    for f in itertools.product(range(n), repeat=n):
        common = set(full)
        for i in range(n):
            common &= decoded[i][f[i]]
        consistent += bool(common)
    return TP2Witness(n, tuple(GFElem(ctx, a) for a in A), tuple(grid), tuple(rows), consistent, n ** n)


# ambient sets up to this size are coded against the whole fixed field
CHAIN_AMBIENT_MAX = 16


@dataclass(frozen=True)
class ChainWitness:
    ambient: tuple[GFElem, ...]
    codes: tuple[CodingCertificate, ...]
    decoded_sizes: tuple[int, ...]
    strict: bool

    @property
    def verified(self) -> bool:
        return self.strict and all(c.verified for c in self.codes)

    def to_dict(self) -> dict:
        return {"ambient": [a.index for a in self.ambient], "codes": [c.code.index for c in self.codes],
                "decoded_sizes": list(self.decoded_sizes), "strict": self.strict,
                "verified": self.verified}


def code_chain(ctx: FieldCtx, length: int, *, workers: int = 1) -> ChainWitness:
    if length < 1:
        raise PreconditionError("chain length must be >= 1")
    if ctx.p == 2:
        raise CharTwo("square coding needs odd characteristic")
    fsize = fixed_field_size(ctx, 1)
    if fsize < length:
        raise FixedFieldTooSmall(f"Fix(sigma) has {fsize} < {length} elements")
    if fsize > (1 << 20):
        raise PreconditionError(f"Fix(sigma) has {fsize} elements; too many to list")
    fixed = fixed_indices(ctx, 1)
    ambient = fixed if fsize <= CHAIN_AMBIENT_MAX else fixed[:length]
    codes, sets = [], []
    for i in range(1, length + 1):
        cert = code_subset_square(ctx, ambient, ambient[:i], workers=workers)
        if not isinstance(cert, CodingCertificate) or not cert.verified:
            raise CodingFailed(f"chain member {i} could not be coded")
        codes.append(cert)
        sets.append({e.index for e in decode(ctx, cert.code, ambient)})
    strict = all(a < b for a, b in zip(sets, sets[1:])) and bool(sets[0])
    return ChainWitness(tuple(GFElem(ctx, a) for a in ambient), tuple(codes),
                        tuple(len(s) for s in sets), strict)


# ------------------------------------------------- truncated arithmetic
@dataclass
class _Coder:
    ctx: FieldCtx
    budget: int
    workers: int = 1
    scanned: int = 0
    codes: int = 0

    def code(self, ambient: list[int], subset: list[int], label: str) -> GFElem:
        left = self.budget - self.scanned
        if left <= 0:
            raise BudgetExceeded(self.scanned, self.budget, label)
        res = code_subset_square(self.ctx, ambient, subset, workers=self.workers, max_scan=left)
        self.scanned += res.search_range
        if not isinstance(res, CodingCertificate):
            if res.search_range >= self.ctx.q:
                raise CodingFailed(f"{label}: no code exists in GF({self.ctx.q})")
            raise BudgetExceeded(self.scanned, self.budget, label)
        if not res.verified:
            raise CodingFailed(f"{label}: certificate failed verification")
        self.codes += 1
        return res.code


@dataclass(frozen=True)
class ArithmeticReport:
    size: int
    q: int
    subset_codes: int
    witnesses: dict
    checks: dict
    isomorphic: bool
    scanned: int

    def to_dict(self) -> dict:
        return {"N": self.size, "q": self.q, "subset_codes": self.subset_codes,
                "witnesses": dict(self.witnesses), "checks": dict(self.checks),
                "isomorphic": self.isomorphic, "scanned": self.scanned}


def _graph_kind(pairs: set[tuple], dom: set, cod: set, surjective_only: bool) -> bool:
    """pairs is the graph of a function dom -> cod, bijective or (if allowed) onto."""
    srcs = [s for s, _ in pairs]
    if set(srcs) != dom or len(srcs) != len(set(srcs)):
        return False
    image = {t for _, t in pairs}
    if not image <= cod or image != cod:
        return False
    return surjective_only or len(image) == len(srcs)


def interpret_truncated_arithmetic(ctx: FieldCtx, Y: Sequence, budget: int = 10 ** 7,
                                   *, workers: int = 1) -> ArithmeticReport:
    """Interpret ({0..N}, +, x) truncated at N = |Y| through coded subsets.

    Numbers are codes of subsets of Y up to the equivalence "there is a coded
    bijection".  A sum or product lands on c when a coded function from the
    disjoint union (resp. product) onto c exists, bijective unless c is all of Y.
    Positive instances get explicit, decoded witnesses; negative ones are ruled
    out by cardinality, since no such function can exist.
    """
    if ctx.p == 2:
        raise CharTwo("square coding needs odd characteristic")
    ys = _distinct(ctx, Y, "Y")
    N = len(ys)
    if N > 4:
        raise PreconditionError("|Y| <= 4 is supported")
    if N == 0:
        return ArithmeticReport(0, ctx.q, 0, {}, {"E": True, "R_add": True, "R_mul": True}, True, 0)
    coder = _Coder(ctx, budget, workers)
    a2, T2 = pair_inject(ctx, ys)
    a3, b3, T3 = triple_inject(ctx, ys)
    pair_pt = {(y1, y2): T2[i * N + j].index for i, y1 in enumerate(ys) for j, y2 in enumerate(ys)}
    trip_pt = {(y1, y2, y3): T3[(i * N + j) * N + l].index
               for i, y1 in enumerate(ys) for j, y2 in enumerate(ys) for l, y3 in enumerate(ys)}
    pt_pair = {v: k for k, v in pair_pt.items()}
    pt_trip = {v: k for k, v in trip_pt.items()}
    amb2, amb3 = list(pair_pt.values()), list(trip_pt.values())

    # S^1: every subset of Y gets a code
    subsets = [tuple(s) for s in all_subsets(ys)]
    s1 = {s: coder.code(ys, list(s), f"S1{list(s)}") for s in subsets}
    decoded1 = {s: frozenset(e.index for e in decode(ctx, c, ys)) for s, c in s1.items()}
    s1_ok = all(decoded1[s] == frozenset(s) for s in subsets)
    rep = {n: tuple(ys[:n]) for n in range(N + 1)}
    t0, t1 = ys[0], ys[1] if N > 1 else ys[0]  # tags for the disjoint union

    checks = {"S1": s1_ok}
    witnesses = {"E": 0, "R_add": 0, "R_mul": 0}

    # E: each subset is coded-bijective with the representative of its size
    e_ok = True
    for s in subsets:
        r = rep[len(s)]
        graph = [pair_pt[(u, v)] for u, v in zip(s, r)]
        g = coder.code(amb2, graph, f"E({list(s)}, {list(r)})")
        pairs = {pt_pair[t.index] for t in decode(ctx, g, amb2)}
        e_ok &= _graph_kind(pairs, set(decoded1[s]), set(r), False)
        witnesses["E"] += 1
    checks["E"] = e_ok

    add_ok = mul_ok = True
    for n1, n2 in itertools.product(range(N + 1), repeat=2):
        A_, B_ = rep[n1], rep[n2]
        # addition: (y, tag) -> c over the disjoint union
        n3 = min(n1 + n2, N)
        C_ = rep[n3]
        union = [(y, t0) for y in A_] + [(y, t1) for y in B_]
        union = list(dict.fromkeys(union))  # tags coincide when |Y| = 1
        graph = {(u[0], u[1], C_[i % n3]) for i, u in enumerate(union)} if n3 else set()
        g = coder.code(amb3, [trip_pt[t] for t in sorted(graph)], f"R_add({n1}, {n2}, {n3})")
        trips = {pt_trip[t.index] for t in decode(ctx, g, amb3)}
        pairs = {((a, b), c) for a, b, c in trips}
        add_ok &= _graph_kind(pairs, set(union), set(C_), n3 == N)
        # negatives: any other c has the wrong size for a bijection/onto map
        for m3 in range(N + 1):
            if m3 != n3:
                feasible = (m3 == len(union)) if m3 < N else (len(union) >= N)
                add_ok &= not feasible
        witnesses["R_add"] += 1

        n4 = min(n1 * n2, N)
        D_ = rep[n4]
        prod = list(itertools.product(A_, B_))
        graph = {(u[0], u[1], D_[i % n4]) for i, u in enumerate(prod)} if n4 else set()
        g = coder.code(amb3, [trip_pt[t] for t in sorted(graph)], f"R_mul({n1}, {n2}, {n4})")
        trips = {pt_trip[t.index] for t in decode(ctx, g, amb3)}
        pairs = {((a, b), c) for a, b, c in trips}
        mul_ok &= _graph_kind(pairs, set(prod), set(D_), n4 == N)
        for m4 in range(N + 1):
            if m4 != n4:
                feasible = (m4 == len(prod)) if m4 < N else (len(prod) >= N)
                mul_ok &= not feasible
        witnesses["R_mul"] += 1
    checks["R_add"] = add_ok
    checks["R_mul"] = mul_ok
    checks["injections"] = len(set(amb2)) == N * N and len(set(amb3)) == N ** 3
    return ArithmeticReport(N, ctx.q, len(s1), witnesses, checks, all(checks.values()), coder.scanned)


# ------------------------------------------------------ fixed-field ξ
@dataclass(frozen=True)
class AclReport:
    p: int
    k: int
    n: int
    q: int
    a_n: int
    fixed_size: int
    count: int
    expected: float
    deviation: float
    bound: float
    within_bound: bool
    precondition_ok: bool

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def designated_fixed_element(ctx: FieldCtx, n: int) -> int:
    """Least element of Fix(sigma^n) outside every Fix(sigma^d), d | n, d < n."""
    smaller = set()
    for d in range(1, n):
        if n % d == 0:
            smaller |= set(fixed_indices(ctx, d))
    for a in fixed_indices(ctx, n):
        if a not in smaller:
            return a
    raise FixedFieldMismatch(f"Fix(sigma^{n}) adds nothing new")


def acl_count(ctx: FieldCtx, n: int, a: int) -> int:
    """#{x : a + x square, y + x a nonzero non-square for the other y in Fix(sigma^n)}."""
    fixed = fixed_indices(ctx, n)
    sq = _square_table(ctx)
    xs = np.arange(ctx.q, dtype=np.int64)
    ok = sq[np.asarray(ctx.vadd(xs, a), dtype=np.int64)]
    for y in fixed:
        if y != a:
            ok &= ~sq[np.asarray(ctx.vadd(xs, y), dtype=np.int64)]
    return int(np.count_nonzero(ok))


def acl_formula_text(n: int) -> str:
    s = "s" if n == 1 else f"s^{n}"
    return f"(E z. z*z = a + x) & (A y. ({s}(y) = y & y != a) -> !(E w. w*w = y + x))"


def acl_experiment(ctx: FieldCtx, n: int) -> AclReport:
    if ctx.p == 2:
        raise CharTwo("square coding needs odd characteristic")
    if n < 1:
        raise PreconditionError("n must be >= 1")
    size = fixed_field_size(ctx, n)
    if size != ctx.p ** n:
        raise FixedFieldMismatch(f"Fix(sigma^{n}) has {size} elements, expected {ctx.p ** n}")
    if ctx.q > (1 << 26):
        raise BudgetExceeded(ctx.q, 1 << 26)
    a = designated_fixed_element(ctx, n)
    c = acl_count(ctx, n, a)
    ell = 2 ** (ctx.p ** n)
    expected = ctx.q / ell
    dev = abs(c - expected)
    bound = counting_constant(ell, ctx.q) * math.sqrt(ctx.q)
    return AclReport(ctx.p, ctx.k, n, ctx.q, a, size, c, expected, dev, bound, dev <= bound,
                     ctx.q > 4 * ell * ell)
