"""Exact satisfaction and solution counting over GF(p^k)^n.

Every free variable owns a broadcast axis, so a subterm is only ever computed
over the variables it mentions.  A quantified variable gets a fresh axis
prepended in front of the current frame; the body is reduced with any/all
over that axis, chunk by chunk, stopping early once the outcome is settled.
"""

from __future__ import annotations

import itertools
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np

from .errors import BudgetExceeded, MissingBinding, MissingParam, PreconditionError
from .field import FieldCtx, GFElem
from .formula import (
    Add, And, Eq, Exists, Forall, FrobLit, Formula, Implies, IntLit, Mul, Neg, Not, Or,
    Param, ParamSpec, Pow, Sigma, Sub, Term, Var, check_alpha, free_vars, params_of,
    quantifier_depth,
)

DEFAULT_BUDGET = 10 ** 10
# elements per broadcast frame; bounds peak memory of one evaluation
CELL_CAP = 1 << 22


def default_budget() -> int:
    env = os.environ.get("FROBLAB_BUDGET")
    return int(float(env)) if env else DEFAULT_BUDGET


@dataclass(frozen=True)
class CountReport:
    count: int
    q: int
    n_free: int
    normalized: float | None  # None signals an empty set
    elapsed: float
    field: tuple[int, int, int]

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "q": self.q,
            "n_free": self.n_free,
            "normalized": self.normalized,
            "field": list(self.field),
        }


@dataclass(frozen=True)
class FiberReport:
    min_fiber: int
    max_fiber: int
    image_count: int
    total: int

    def sandwich_holds(self) -> bool:
        return self.min_fiber * self.image_count <= self.total <= self.max_fiber * self.image_count

    def to_dict(self) -> dict:
        return {
            "min_fiber": self.min_fiber,
            "max_fiber": self.max_fiber,
            "image_count": self.image_count,
            "total": self.total,
        }


# ------------------------------------------------------------- bindings
def resolve_params(ctx: FieldCtx, phi: Formula, params: Mapping | None) -> dict[str, int]:
    params = params or {}
    out: dict[str, int] = {}
    for name in params_of(phi):
        if name not in params:
            raise MissingParam(f"parameter '{name}' has no binding")
        out[name] = _as_index(ctx, params[name], name)
    return out


def _as_index(ctx: FieldCtx, v, name: str) -> int:
    if isinstance(v, ParamSpec):
        return v.resolve(ctx)
    if isinstance(v, GFElem):
        return ctx.index_of(v)
    if isinstance(v, (int, np.integer)):
        if not 0 <= int(v) < ctx.q:
            raise PreconditionError(f"binding for '{name}' is not an index of GF({ctx.q})")
        return int(v)
    raise PreconditionError(f"cannot bind '{name}' to {v!r}")


def required_evaluations(q: int, n_free: int, phi: Formula) -> int:
    """Worst-case number of innermost evaluations for exhaustive expansion."""
    return q ** (n_free + quantifier_depth(phi))


def _check_budget(q: int, n_free: int, phi: Formula, budget: int | None) -> None:
    budget = default_budget() if budget is None else budget
    need = required_evaluations(q, n_free, phi)
    if need > budget:
        raise BudgetExceeded(need, budget)


# ------------------------------------------------------------ evaluator
class _Evaluator:
    def __init__(self, ctx: FieldCtx, params: dict[str, int]):
        self.ctx = ctx
        self.params = params
        self.dtype = ctx.dtype

    def term(self, t: Term, env: dict):
        ctx = self.ctx
        if isinstance(t, Var):
            return env[t.name]
        if isinstance(t, IntLit):
            return _env_scalar(ctx, t.value % ctx.p)
        if isinstance(t, Param):
            return _env_scalar(ctx, self.params[t.name])
        if isinstance(t, Add):
            return ctx.vadd(self.term(t.left, env), self.term(t.right, env))
        if isinstance(t, Sub):
            return ctx.vsub(self.term(t.left, env), self.term(t.right, env))
        if isinstance(t, Mul):
            return ctx.vmul(self.term(t.left, env), self.term(t.right, env))
        if isinstance(t, Neg):
            return ctx.vneg(self.term(t.arg, env))
        if isinstance(t, Pow):
            return ctx.vpow(self.term(t.base, env), t.exp)
        if isinstance(t, Sigma):
            return ctx.vfrob(self.term(t.arg, env), t.power)
        if isinstance(t, FrobLit):
            return ctx.vpow_p_power(self.term(t.arg, env), t.e)
        raise TypeError(f"not a term: {t!r}")

    def formula(self, f: Formula, env: dict, frame: tuple[int, ...]):
        if isinstance(f, Eq):
            return np.equal(self.term(f.left, env), self.term(f.right, env))
        if isinstance(f, Not):
            return np.logical_not(self.formula(f.arg, env, frame))
        if isinstance(f, And):
            left = self.formula(f.left, env, frame)
            if not np.any(left):
                return left
            return np.logical_and(left, self.formula(f.right, env, frame))
        if isinstance(f, Or):
            left = self.formula(f.left, env, frame)
            if np.all(left):
                return left
            return np.logical_or(left, self.formula(f.right, env, frame))
        if isinstance(f, Implies):
            left = self.formula(f.left, env, frame)
            if not np.any(left):
                return np.logical_not(left)
            return np.logical_or(np.logical_not(left), self.formula(f.right, env, frame))
        if isinstance(f, (Exists, Forall)):
            return self._quantifier(f, env, frame)
        raise TypeError(f"not a formula: {f!r}")

    def _quantifier(self, f, env: dict, frame: tuple[int, ...]):
        q = self.ctx.q
        exists = isinstance(f, Exists)
        size = math.prod(frame)
        chunk = max(1, min(q, CELL_CAP // max(size, 1)))
        pad = (1,) * len(frame)
        acc = None
        for s in range(0, q, chunk):
            e = min(s + chunk, q)
            vals = np.arange(s, e, dtype=np.int64).astype(self.dtype, copy=False).reshape((e - s,) + pad)
            inner = dict(env)
            inner[f.var] = vals
            res = np.asarray(self.formula(f.body, inner, (e - s,) + frame))
            if res.ndim > len(frame):
                res = res.any(axis=0) if exists else res.all(axis=0)
            if acc is None:
                acc = res
            else:
                acc = np.logical_or(acc, res) if exists else np.logical_and(acc, res)
            if exists and np.all(acc):
                break
            if not exists and not np.any(acc):
                break
        return acc


def _env_scalar(ctx: FieldCtx, v: int):
    return int(v) if ctx.dtype is object else np.int64(v)


# ------------------------------------------------------------- evaluate
def evaluate(ctx: FieldCtx, phi: Formula, env: Mapping, params: Mapping | None = None) -> bool:
    """Truth of ``phi`` under ``env`` (free variables and, optionally, parameters)."""
    check_alpha(phi)
    env = dict(env)
    binding: dict[str, int] = {}
    for name in free_vars(phi):
        if name not in env:
            raise MissingBinding(f"free variable '{name}' is unbound")
        binding[name] = _env_scalar(ctx, _as_index(ctx, env[name], name))
    merged = dict(params or {})
    for name in params_of(phi):
        if name not in merged and name in env:
            merged[name] = env[name]
    pvals = resolve_params(ctx, phi, merged)
    ev = _Evaluator(ctx, pvals)
    return bool(np.all(ev.formula(phi, binding, ())))


# ----------------------------------------------------------- grid tasks
@dataclass(frozen=True)
class _Task:
    lead: tuple[int, ...]  # values of the leading variables, held as scalars
    start: int             # index range of the blocked variable
    stop: int


def _plan(q: int, n: int, cap: int = CELL_CAP) -> tuple[int, list[_Task]]:
    """Split q^n assignments into contiguous lexicographic tasks.

    Returns (L, tasks): the first L variables are scalar in each task, variable
    L is restricted to [start, stop) and the remaining ones span the field.
    """
    if n == 0:
        return 0, [_Task((), 0, 1)]
    lead = 0
    while lead < n - 1 and q ** (n - lead - 1) > cap:
        lead += 1
    inner = q ** (n - lead - 1)
    block = max(1, cap // inner)
    tasks = []
    for prefix in itertools.product(range(q), repeat=lead):
        for s in range(0, q, block):
            tasks.append(_Task(prefix, s, min(s + block, q)))
    return lead, tasks


def _task_env(ctx: FieldCtx, names: list[str], lead: int, task: _Task):
    n = len(names)
    env = {}
    for name, v in zip(names[:lead], task.lead):
        env[name] = _env_scalar(ctx, v)
    frame: tuple[int, ...] = ()
    if n:
        rest = n - lead - 1
        env[names[lead]] = np.arange(task.start, task.stop, dtype=np.int64).astype(
            ctx.dtype, copy=False).reshape((task.stop - task.start,) + (1,) * rest)
        for i, name in enumerate(names[lead + 1:]):
            shape = [1] * rest
            shape[i] = ctx.q
            env[name] = np.arange(ctx.q, dtype=np.int64).astype(ctx.dtype, copy=False).reshape(shape)
        frame = (task.stop - task.start,) + (ctx.q,) * rest
    return env, frame


def _map_tasks(fn, tasks: list, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _prepare(ctx: FieldCtx, phi: Formula, params, budget, order: list[str] | None = None):
    check_alpha(phi)
    names = order if order is not None else free_vars(phi)
    missing = set(free_vars(phi)) - set(names)
    if missing:
        raise PreconditionError(f"variables {sorted(missing)} are not counted")
    _check_budget(ctx.q, len(names), phi, budget)
    pvals = resolve_params(ctx, phi, params)
    if ctx.has_tables:
        ctx.tables()  # build once before threads fan out
    return names, _Evaluator(ctx, pvals)


# ---------------------------------------------------------------- count
def count(ctx: FieldCtx, phi: Formula, params: Mapping | None = None, *,
          variables: list[str] | None = None, workers: int = 1,
          budget: int | None = None) -> CountReport:
    """Exact number of assignments to the free variables satisfying ``phi``.

    ``variables`` may list extra (dummy) variables to count over, in order.
    """
    t0 = time.perf_counter()
    names, ev = _prepare(ctx, phi, params, budget, variables)
    lead, tasks = _plan(ctx.q, len(names))

    def run(task: _Task) -> int:
        env, frame = _task_env(ctx, names, lead, task)
        res = np.asarray(ev.formula(phi, env, frame))
        return int(np.count_nonzero(np.broadcast_to(res, frame)))

    total = sum(_map_tasks(run, tasks, workers))
    n = len(names)
    normalized = math.log(total) / math.log(ctx.q) if total else None
    return CountReport(total, ctx.q, n, normalized, time.perf_counter() - t0, (ctx.p, ctx.k, ctx.m))


def truth_table(ctx: FieldCtx, phi: Formula, params: Mapping | None = None, *,
                variables: list[str] | None = None, workers: int = 1,
                budget: int | None = None, max_cells: int = 1 << 26) -> np.ndarray:
    """Boolean array of shape (q,)*n over the counted variables, lexicographic."""
    names, ev = _prepare(ctx, phi, params, budget, variables)
    cells = ctx.q ** len(names)
    if cells > max_cells:
        raise BudgetExceeded(cells, max_cells)
    lead, tasks = _plan(ctx.q, len(names))

    def run(task: _Task) -> np.ndarray:
        env, frame = _task_env(ctx, names, lead, task)
        res = np.asarray(ev.formula(phi, env, frame))
        return np.broadcast_to(res, frame).reshape(-1)

    parts = _map_tasks(run, tasks, workers)
    return np.concatenate(parts).reshape((ctx.q,) * len(names))


def solutions(ctx: FieldCtx, phi: Formula, params: Mapping | None = None, **kw) -> Iterator[tuple[GFElem, ...]]:
    table = truth_table(ctx, phi, params, **kw)
    for idx in zip(*np.nonzero(table)):
        yield tuple(ctx.elem(int(i)) for i in idx)


def definable_set(ctx: FieldCtx, phi: Formula, params: Mapping | None = None, **kw) -> np.ndarray:
    """Sorted indices of ψ(F) for a formula with exactly one free variable."""
    fv = free_vars(phi)
    if len(fv) != 1:
        raise PreconditionError(f"expected exactly one free variable, found {fv}")
    return np.flatnonzero(truth_table(ctx, phi, params, **kw))


# --------------------------------------------------------------- fibers
def fiber_counts(ctx: FieldCtx, phi: Formula, x_block: list[str], y_block: list[str],
                 params: Mapping | None = None, *, workers: int = 1,
                 budget: int | None = None, max_fibers: int = 1 << 26) -> FiberReport:
    """Fiber statistics of phi(x; y) over the parameter block y."""
    x_block, y_block = list(x_block), list(y_block)
    if set(x_block) & set(y_block):
        raise PreconditionError("x and y blocks overlap")
    ny = len(y_block)
    n_fibers = ctx.q ** ny
    if n_fibers > max_fibers:
        raise BudgetExceeded(n_fibers, max_fibers)
    names, ev = _prepare(ctx, phi, params, budget, y_block + x_block)
    lead, tasks = _plan(ctx.q, len(names))
    q = ctx.q

    def run(task: _Task):
        env, frame = _task_env(ctx, names, lead, task)
        res = np.broadcast_to(np.asarray(ev.formula(phi, env, frame)), frame)
        if lead >= ny:
            yi = 0
            for v in task.lead[:ny]:
                yi = yi * q + v
            return yi, np.array([np.count_nonzero(res)], dtype=np.int64)
        # frame axes: [blocked y] + remaining y + x
        y_axes = ny - lead  # blocked axis counts as a y axis
        per_y = res.reshape(math.prod(frame[:y_axes]), -1).sum(axis=1, dtype=np.int64)
        prefix = 0
        for v in task.lead:
            prefix = prefix * q + v
        start = (prefix * q + task.start) * q ** (ny - lead - 1)
        return start, per_y

    fibers = np.zeros(n_fibers, dtype=np.int64)
    for start, part in _map_tasks(run, tasks, workers):
        fibers[start:start + len(part)] += part
    nz = fibers[fibers > 0]
    if nz.size == 0:
        return FiberReport(0, 0, 0, 0)
    return FiberReport(int(nz.min()), int(nz.max()), int(nz.size), int(nz.sum()))
