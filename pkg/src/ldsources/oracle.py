"""Exact rational reference computations for small instances.

Brute force over every composition with ``fractions.Fraction`` weights; used
by the test-suite to check the log-space sweeps.  Nothing here is fast.
"""
from __future__ import annotations

import math
from fractions import Fraction

import mpmath

from .core import NType, as_exact, evaluate_set
from .divergence import exact_type_probability

LOG_PREC_BITS = 200


def all_types(n: int, m: int):
    """Every count vector of length ``m`` summing to ``n`` (lexicographically descending)."""
    if m == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in all_types(n - first, m - 1):
            yield (first,) + rest


def source_weight(q: tuple, t: tuple) -> Fraction:
    """``prod_i (q_i / n) ** t_i`` for an n-source ``q`` and type counts ``t``."""
    n = sum(q)
    out = Fraction(1)
    for c, ti in zip(q, t):
        if ti:
            out *= Fraction(c, n) ** ti
    return out


def _member(spec, counts) -> bool:
    return spec is None or evaluate_set(spec, NType(counts))


def _prior_mass(prior, counts) -> Fraction:
    if prior is None or prior.is_uniform:
        return Fraction(1)
    return Fraction(prior.mass(NType(counts)))


def exact_posterior(B, Q, t: NType, prior=None) -> Fraction:
    """``pi(q in B | q in Q, t)`` as an exact fraction; ``prior`` is None or a QuantizedPrior."""
    num = den = Fraction(0)
    for q in all_types(t.n, t.m):
        if not _member(Q, q):
            continue
        w = _prior_mass(prior, q) * source_weight(q, t.counts)
        den += w
        if _member(B, q):
            num += w
    if den == 0:
        raise ZeroDivisionError("conditioning set has zero posterior")
    return num / den


def exact_set_weight(Q, t: NType, prior=None) -> Fraction:
    return sum(
        (_prior_mass(prior, q) * source_weight(q, t.counts) for q in all_types(t.n, t.m) if _member(Q, q)),
        Fraction(0),
    )


def exact_map_source(Q, t: NType, prior=None) -> NType:
    best, best_w = None, Fraction(-1)
    for q in all_types(t.n, t.m):
        if not _member(Q, q):
            continue
        w = _prior_mass(prior, q) * source_weight(q, t.counts)
        if w > best_w:
            best, best_w = q, w
    return NType(best)


def exact_l_argmax(Q, t: NType) -> NType:
    """First n-source in ``Q`` maximizing ``sum_i t_i log q_i`` (compared as exact products)."""
    best, best_key = None, -1
    for q in all_types(t.n, t.m):
        if not _member(Q, q):
            continue
        key = math.prod(c**ti for c, ti in zip(q, t.counts))
        if key > best_key:
            best, best_key = q, key
    return NType(best)


def exact_types_probability(Pi, r, n: int) -> Fraction:
    """Exact probability that i.i.d. draws from rational ``r`` give an n-type in ``Pi``."""
    src = as_exact(r)
    total = Fraction(0)
    for c in all_types(n, len(src)):
        if _member(Pi, c):
            total += exact_type_probability(NType(c), src)
    return total


def exact_log(x: Fraction, prec: int = LOG_PREC_BITS) -> float:
    """Natural log of a positive rational, evaluated at ``prec`` bits and rounded to float."""
    if x <= 0:
        return -math.inf
    with mpmath.workprec(prec):
        return float(mpmath.log(mpmath.mpf(x.numerator)) - mpmath.log(mpmath.mpf(x.denominator)))
