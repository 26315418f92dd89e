"""froblab command line: one JSON record (or CSV table) per invocation."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from pathlib import Path
from typing import Callable

from . import __version__
from . import coding, counting, diffalg, dimension
from .errors import FrobLabError, PreconditionError
from .field import find_generator, find_nonsquare, fixed_field_size, make_field
from .formula import ParamSpec, parse, parse_param, ring_text, specialize, to_text
from . import polynomial as P

SCHEMA = "froblab/1"


class _Parser(argparse.ArgumentParser):
    """argparse that reports flag problems in the same shape as other errors."""

    def error(self, message):
        name = "UnknownCommand" if message.startswith("argument command: invalid choice") else "BadFlag"
        self.exit(2, f"error: {name}: {message}\n")


def _int_list(text: str) -> list[int]:
    text = text.strip()
    if not text:
        return []
    try:
        return [int(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _schedule(text: str) -> list[int]:
    ks = _int_list(text)
    if not ks:
        raise argparse.ArgumentTypeError("schedule is empty")
    return ks


# ---------------------------------------------------------------- helpers
def _field(a):
    return make_field(a.p, a.k, a.m)


def _formula_text(a) -> str:
    if a.formula_file:
        return Path(a.formula_file).read_text(encoding="utf-8").strip()
    if a.formula is None:
        raise PreconditionError("give --formula or --formula-file")
    return a.formula


def _params(a) -> dict[str, ParamSpec]:
    out = {}
    for text in a.param or []:
        spec = parse_param(text)
        if spec.name in out:
            raise PreconditionError(f"parameter '{spec.name}' bound twice")
        out[spec.name] = spec
    return out


def _formula(a):
    params = _params(a)
    return parse(_formula_text(a), params=list(params)), params


# --------------------------------------------------------------- commands
def cmd_field_info(a) -> dict:
    ctx = _field(a)
    out = {"p": ctx.p, "k": ctx.k, "m": ctx.m, "q": ctx.q, "modulus": list(ctx.modulus),
           "generator": find_generator(ctx).index if ctx.q <= (1 << 40) else None,
           "fixed_field_size": fixed_field_size(ctx, 1)}
    out["nonsquare"] = find_nonsquare(ctx).index if ctx.p != 2 else None
    return out


def cmd_count(a) -> dict:
    ctx = _field(a)
    phi, params = _formula(a)
    rep = counting.count(ctx, phi, params, workers=a.workers, budget=a.budget)
    out = rep.to_dict()
    out["formula"] = to_text(phi)
    if a.specialize:
        ring = specialize(phi, ctx.p, ctx.m)
        out["ring_formula"] = ring_text(ring, ctx.p)
        out["ring_count"] = counting.count(ctx, ring, params, workers=a.workers, budget=a.budget).count
    return out


def cmd_dim(a) -> dict:
    phi, params = _formula(a)
    est = dimension.estimate_dimension(a.p, a.schedule, a.m, phi, params, tol=a.tol,
                                       workers=a.workers, budget=a.budget)
    out = est.to_dict()
    out["formula"] = to_text(phi)
    return out


def cmd_theta(a) -> dict:
    ctx = _field(a)
    phi, params = _formula(a)
    res = dimension.theta_test(ctx, phi, params, workers=a.workers, budget=a.budget)
    return res.to_dict()


def cmd_subadd(a) -> dict:
    ctx = _field(a)
    phi, params = _formula(a)
    rep = dimension.check_subadditivity(ctx, phi, a.x, a.y, params, workers=a.workers, budget=a.budget)
    return rep.to_dict()


def cmd_code_subset(a) -> dict:
    ctx = _field(a)
    if a.kind == "square":
        res = coding.code_subset_square(ctx, a.A, a.E, order=a.order, seed=a.seed,
                                        workers=a.workers, max_scan=a.max_scan)
    elif a.kind == "cube":
        res = coding.code_subset_cube(ctx, a.A, a.E, order=a.order, seed=a.seed,
                                      workers=a.workers, max_scan=a.max_scan)
    else:
        res = coding.paley_code(ctx, a.A, a.E, workers=a.workers)
    return res.to_dict()


def cmd_paley(a) -> dict:
    return coding.paley_count(_field(a), a.A, a.E).to_dict()


def cmd_measure(a) -> dict:
    return coding.measure_experiment(_field(a), a.n, a.trials, a.seed).to_dict()


def cmd_pair_inject(a) -> dict:
    ctx = _field(a)
    inj, T = coding.pair_inject(ctx, a.Y)
    return {"a": inj.index, "T": [t.index for t in T], "size": len(set(t.index for t in T))}


def cmd_tp2(a) -> dict:
    return coding.tp2_witness(_field(a), a.n, workers=a.workers).to_dict()


def cmd_chain(a) -> dict:
    return coding.code_chain(_field(a), a.length, workers=a.workers).to_dict()


def cmd_interpret_arith(a) -> dict:
    return coding.interpret_truncated_arithmetic(_field(a), a.Y, a.search_budget,
                                                 workers=a.workers).to_dict()


def cmd_acl(a) -> dict:
    return coding.acl_experiment(_field(a), a.n).to_dict()


def cmd_sigma_spec(a) -> dict:
    f = diffalg.parse_diffpoly(a.poly, a.p, _params(a))
    g = diffalg.sigma_specialize(f, a.p, a.m)
    terms = []
    for e, c in reversed(list(enumerate(g))):
        if c:
            mono = "" if e == 0 else "x" if e == 1 else f"x^{e}"
            terms.append(str(c) if not mono else mono if c == 1 else f"{c}*{mono}")
    return {"poly": str(f), "order": f.order, "coefficients": g, "degree": P.degree(g),
            "ring_poly": " + ".join(terms) if terms else "0"}


def cmd_sigma_stability(a) -> dict:
    f = diffalg.parse_diffpoly(a.poly, a.p, _params(a))
    return diffalg.root_count_stability(f, a.p, a.m, a.schedule, workers=a.workers).to_dict()


def cmd_torus(a) -> dict:
    return diffalg.torus_subgroup(make_field(a.p, a.k, 1)).to_dict()


def cmd_probe(a) -> dict:
    phi, params = _formula(a)
    return diffalg.sigma_degree_probe(phi, a.p, a.m, a.schedule, params, workers=a.workers,
                                      budget=a.budget).to_dict()


# -------------------------------------------------------------- csv rows
def _rows(command: str, rec: dict) -> list[dict] | None:
    if command == "dim":
        return [dict(r, fitted_dim=rec["fitted_dim"]) for r in rec["per_k"]]
    if command == "sigma-stability":
        return rec["counts"]
    if command == "probe":
        return rec["per_k"]
    if command == "measure":
        return [{"trial": i, "count": c, "deviation": d}
                for i, (c, d) in enumerate(zip(rec["counts"], rec["deviations"]))]
    return None


def _to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    fields = list(rows[0]) if rows else []
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------- parser
def _add_common(sp, *, field=True, k=True, formula=False, schedule=False):
    if field:
        sp.add_argument("--p", type=int, required=True, help="characteristic")
        if k:
            sp.add_argument("--k", type=int, default=1, help="extension degree")
        sp.add_argument("--m", type=int, default=1, help="sigma = x^(p^m)")
    if schedule:
        sp.add_argument("--schedule", type=_schedule, required=True, help="comma-separated k values")
    if formula:
        sp.add_argument("--formula", help="formula text")
        sp.add_argument("--formula-file", help="read the formula from a file")
        sp.add_argument("--param", action="append", metavar="NAME=KIND[:V]",
                        help="parameter binding: int:V, gen, nonsq or idx:V")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--budget", type=int, default=None, help="max innermost evaluations")
    sp.add_argument("--format", choices=("json", "csv"), default="json")


COMMANDS: dict[str, Callable] = {}


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="froblab", description="Finite difference-field laboratory.")
    ap.add_argument("--version", action="version", version=f"froblab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def cmd(name, fn, help_, **kw):
        sp = sub.add_parser(name, help=help_)
        _add_common(sp, **kw)
        COMMANDS[name] = fn
        return sp

    cmd("field-info", cmd_field_info, "modulus, generator and fixed field of GF(p^k)")
    sp = cmd("count", cmd_count, "exact solution count", formula=True)
    sp.add_argument("--specialize", action="store_true", help="also count the ring specialization")
    sp = cmd("dim", cmd_dim, "dimension estimate along a schedule", k=False, formula=True, schedule=True)
    sp.add_argument("--tol", type=float, default=dimension.DEFAULT_TOL)
    cmd("theta", cmd_theta, "quotient-set test for a one-variable set", formula=True)
    sp = cmd("subadd", cmd_subadd, "fiber sandwich for phi(x; y)", formula=True)
    sp.add_argument("--x", type=lambda s: [v for v in s.split(",") if v], required=True)
    sp.add_argument("--y", type=lambda s: [v for v in s.split(",") if v], required=True)
    sp = cmd("code-subset", cmd_code_subset, "code E inside A by a field element")
    sp.add_argument("--A", type=_int_list, required=True)
    sp.add_argument("--E", type=_int_list, default=[])
    sp.add_argument("--kind", choices=coding.KINDS, default="square")
    sp.add_argument("--order", choices=("canonical", "random"), default="canonical")
    sp.add_argument("--max-scan", type=int, default=None)
    sp = cmd("paley", cmd_paley, "Paley common-neighbourhood count and bound")
    sp.add_argument("--A", type=_int_list, required=True)
    sp.add_argument("--E", type=_int_list, default=[])
    sp = cmd("measure", cmd_measure, "residue-pattern counts for random tuples")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--trials", type=int, default=100)
    sp = cmd("pair-inject", cmd_pair_inject, "injective pair coding of Y x Y")
    sp.add_argument("--Y", type=_int_list, required=True)
    sp = cmd("tp2", cmd_tp2, "n x n grid of coded sets")
    sp.add_argument("--n", type=int, required=True)
    sp = cmd("chain", cmd_chain, "strictly increasing chain of coded sets")
    sp.add_argument("--length", type=int, required=True)
    sp = cmd("interpret-arith", cmd_interpret_arith, "truncated arithmetic through coded sets")
    sp.add_argument("--Y", type=_int_list, required=True)
    sp.add_argument("--search-budget", type=int, default=10 ** 7)
    sp = cmd("acl", cmd_acl, "fixed-field residue experiment")
    sp.add_argument("--n", type=int, default=1)
    sp = cmd("sigma-spec", cmd_sigma_spec, "specialize a difference polynomial", k=False)
    sp.add_argument("--poly", required=True)
    sp.add_argument("--param", action="append", metavar="NAME=int:V")
    sp = cmd("sigma-stability", cmd_sigma_stability, "root counts along a schedule", k=False, schedule=True)
    sp.add_argument("--poly", required=True)
    sp.add_argument("--param", action="append", metavar="NAME=int:V")
    cmd("torus", cmd_torus, "image of x -> x^(p-1) and its index")
    cmd("probe", cmd_probe, "count-trend probe for a one-variable set", k=False, formula=True, schedule=True)
    return ap


def _config(a) -> dict:
    skip = {"command", "workers", "format"}
    return {k.replace("_", "-"): v for k, v in sorted(vars(a).items()) if k not in skip}


def run(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as exc:  # argparse already printed
        return int(exc.code or 0)
    t0 = time.perf_counter()
    try:
        result = COMMANDS[a.command](a)
    except FrobLabError as exc:
        print(f"error: {exc.name}: {exc}", file=stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=stderr)
        return 2
    except Exception as exc:  # pragma: no cover - surfaced as exit 1
        print(f"error: internal: {type(exc).__name__}: {exc}", file=stderr)
        return 1
    if a.format == "csv":
        rows = _rows(a.command, result)
        if rows is None:
            print(f"error: BadFlag: --format csv is not available for {a.command}", file=stderr)
            return 2
        stdout.write(_to_csv(rows))
        return 0
    record = {"schema": SCHEMA, "version": __version__, "command": a.command, "config": _config(a)}
    record.update(result)
    record["runtime"] = {"elapsed_s": round(time.perf_counter() - t0, 6), "workers": a.workers}
    stdout.write(json.dumps(_clean(record), sort_keys=True) + "\n")
    return 0


def _clean(v):
    """JSON-safe copy: tuples to lists, non-finite floats to strings."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if hasattr(v, "item") and not isinstance(v, (str, bytes)):
        return v.item()
    return v


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
