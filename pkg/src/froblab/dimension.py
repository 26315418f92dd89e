"""Dimension estimates along growing fields, plus the quotient-set and fiber tests."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .counting import count, definable_set, fiber_counts, FiberReport
from .errors import BudgetExceeded, PreconditionError
from .field import FieldCtx, TABLE_LIMIT, make_field
from .formula import Formula, ParamSpec, free_vars, params_of

DEFAULT_TOL = 0.1
DIVERGENT = "divergent"


@dataclass(frozen=True)
class KPoint:
    k: int
    count: int
    delta: float | None  # None when the set is empty


@dataclass(frozen=True)
class DimensionEstimate:
    p: int
    m: int
    schedule: tuple[int, ...]
    per_k: tuple[KPoint, ...]
    fitted_dim: int | str
    residual: float | None
    n_free: int
    tolerance: float = DEFAULT_TOL
    reason: str = ""

    @property
    def divergent(self) -> bool:
        return self.fitted_dim == DIVERGENT

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "m": self.m,
            "schedule": list(self.schedule),
            "per_k": [{"k": r.k, "count": r.count, "delta": r.delta} for r in self.per_k],
            "fitted_dim": self.fitted_dim,
            "residual": self.residual,
            "n_free": self.n_free,
            "tolerance": self.tolerance,
            "reason": self.reason,
        }


def delta(count_: int, k: int, p: int) -> float | None:
    return math.log(count_) / (k * math.log(p)) if count_ else None


def fit_dimension(points: Sequence[KPoint], tol: float = DEFAULT_TOL) -> tuple[int | str, float | None, str]:
    """Integer fit of the last delta, with the divergence rules applied."""
    last = points[-1]
    if last.delta is None:
        return DIVERGENT, None, "empty set at k_max"
    d = round(last.delta)
    residual = abs(last.delta - d)
    if residual >= tol:
        return DIVERGENT, residual, f"residual {residual:.4f} >= {tol}"
    ds = [pt.delta for pt in points]
    if len(ds) >= 3 and None not in ds[-3:]:
        step_last = abs(ds[-1] - ds[-2])
        step_prev = abs(ds[-2] - ds[-3])
        if step_last > step_prev + 1e-12:
            return DIVERGENT, residual, "delta steps are growing"
    return d, residual, ""


def _check_stable(phi: Formula, params: Mapping | None) -> None:
    for name in params_of(phi):
        spec = (params or {}).get(name)
        if isinstance(spec, ParamSpec) and not spec.schedule_stable:
            raise PreconditionError(f"parameter '{name}' is bound to a fixed index; use int, gen or nonsq")
        if spec is not None and not isinstance(spec, ParamSpec):
            raise PreconditionError(f"parameter '{name}' needs a ParamSpec across a schedule")


def estimate_dimension(p: int, schedule: Sequence[int], m: int, phi: Formula,
                       params: Mapping | None = None, *, tol: float = DEFAULT_TOL,
                       workers: int = 1, budget: int | None = None) -> DimensionEstimate:
    schedule = tuple(int(k) for k in schedule)
    if not schedule:
        raise PreconditionError("schedule is empty")
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise PreconditionError("schedule must be strictly increasing")
    _check_stable(phi, params)
    points = []
    for k in schedule:
        ctx = make_field(p, k, m)
        try:
            rep = count(ctx, phi, params, workers=workers, budget=budget)
        except BudgetExceeded as exc:
            exc.args = (f"{exc.args[0]} at k={k}",)
            exc.k = k
            raise
        points.append(KPoint(k, rep.count, delta(rep.count, k, p)))
    fitted, residual, reason = fit_dimension(points, tol)
    return DimensionEstimate(p, m, schedule, tuple(points), fitted, residual,
                             len(free_vars(phi)), tol, reason)


# ---------------------------------------------------------------- theta
@dataclass(frozen=True)
class ThetaResult:
    theta_holds: bool
    card: int
    q: int
    witness: int | None  # an element outside the quotient set, when one exists

    @property
    def dichotomy_ok(self) -> bool:
        if self.theta_holds:
            return self.card ** 4 >= self.q
        return self.card ** 2 <= self.q

    def to_dict(self) -> dict:
        return {"theta_holds": self.theta_holds, "card": self.card, "q": self.q,
                "witness": self.witness, "dichotomy_ok": self.dichotomy_ok}


def _difference_mask(ctx: FieldCtx, s: np.ndarray, stop_at: int) -> np.ndarray:
    """Mask of S - S, filled row-block by row-block until it has > stop_at nonzeros."""
    mask = np.zeros(ctx.q, dtype=bool)
    rows = max(1, (1 << 22) // max(len(s), 1))
    for i in range(0, len(s), rows):
        d = ctx.vsub(s[i:i + rows, None], s[None, :])
        mask[np.asarray(d, dtype=np.int64).ravel()] = True
        if np.count_nonzero(mask[1:]) > stop_at:
            break
    return mask


def quotient_cover(ctx: FieldCtx, s: np.ndarray) -> tuple[bool, int | None]:
    """Whether every z in F is (x1 - x2)/(x3 - x4) over S with x3 != x4.

    Returns (covered, least uncovered element or None).
    """
    q = ctx.q
    if len(s) < 2:
        return False, 0  # no admissible denominator, nothing is covered
    if q > TABLE_LIMIT:
        raise BudgetExceeded(q, TABLE_LIMIT)
    half = (q - 1) // 2
    mask = _difference_mask(ctx, s, half)
    nonzero = np.flatnonzero(mask[1:]) + 1
    if len(nonzero) > half:
        # any two subsets of the cyclic group of size > (q-1)/2 meet after a shift
        return True, None
    _, log = ctx.tables()
    ind = np.zeros(q - 1)
    ind[log[nonzero]] = 1.0
    f = np.fft.rfft(ind)
    corr = np.fft.irfft(f * np.conj(f), n=q - 1)
    hit = corr > 0.5  # t in L - L
    if hit.all():
        return True, None
    exp, _ = ctx.tables()
    missing = exp[np.flatnonzero(~hit)]
    return False, int(missing.min())


def theta_test(ctx: FieldCtx, psi: Formula, params: Mapping | None = None, *,
               workers: int = 1, budget: int | None = None) -> ThetaResult:
    s = definable_set(ctx, psi, params, workers=workers, budget=budget).astype(np.int64)
    card = len(s)
    if ctx.q > TABLE_LIMIT:
        raise BudgetExceeded(ctx.q, TABLE_LIMIT)
    holds, witness = quotient_cover(ctx, s)
    return ThetaResult(holds, card, ctx.q, witness)


# ------------------------------------------------------- subadditivity
@dataclass(frozen=True)
class SubadditivityReport:
    fibers: FiberReport
    q: int
    log_total: float | None
    log_lower: float | None
    log_upper: float | None
    sandwich_ok: bool

    def to_dict(self) -> dict:
        d = self.fibers.to_dict()
        d.update(q=self.q, log_total=self.log_total, log_lower=self.log_lower,
                 log_upper=self.log_upper, sandwich_ok=self.sandwich_ok)
        return d


def check_subadditivity(ctx: FieldCtx, phi: Formula, x_block: Sequence[str], y_block: Sequence[str],
                        params: Mapping | None = None, *, workers: int = 1,
                        budget: int | None = None) -> SubadditivityReport:
    fr = fiber_counts(ctx, phi, list(x_block), list(y_block), params, workers=workers, budget=budget)
    lq = math.log(ctx.q)
    lg = lambda v: math.log(v) / lq if v > 0 else None
    lower = lg(fr.min_fiber * fr.image_count)
    upper = lg(fr.max_fiber * fr.image_count)
    return SubadditivityReport(fr, ctx.q, lg(fr.total), lower, upper, fr.sandwich_holds())
