"""Finite difference fields (GF(p^k), x -> x^(p^m)) as a counting laboratory."""

__version__ = "0.1.0"

from .field import (  # noqa: F401
    FieldCtx,
    GFElem,
    arith,
    enumerate_field,
    find_generator,
    find_nonsquare,
    fixed_set,
    frobenius,
    is_square,
    make_field,
)
