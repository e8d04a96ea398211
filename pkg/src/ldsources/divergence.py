"""I- and L-divergences, multiplicities and log-probabilities of types.

Every quantity is a natural-log value; ``-inf`` stands for probability zero.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from scipy.special import gammaln

from .core import DimensionError, NType, as_exact, as_weights

NEG_INF = -math.inf


def _pair(p, q):
    pw, qw = as_weights(p), as_weights(q)
    if pw.shape != qw.shape:
        raise DimensionError(f"alphabet mismatch: {pw.size} vs {qw.size} letters")
    return pw, qw


def logsumexp(values) -> float:
    """``log(sum(exp(values)))`` with a running maximum; empty or all ``-inf`` gives ``-inf``."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        return NEG_INF
    vmax = v.max()
    if vmax == NEG_INF:
        return NEG_INF
    if vmax == math.inf:
        return math.inf
    return float(vmax + math.log(math.fsum(np.exp(v - vmax).tolist())))


def entropy(p) -> float:
    w = as_weights(p)
    s = w[w > 0]
    return float(-np.dot(s, np.log(s)))


def i_divergence(p, q) -> float:
    """``I(p||q) = sum_{S(p)} p log(p/q)``; ``+inf`` when S(p) is not inside S(q)."""
    pw, qw = _pair(p, q)
    s = pw > 0
    if np.any(qw[s] <= 0):
        return math.inf
    val = float(np.dot(pw[s], np.log(pw[s]) - np.log(qw[s])))
    return max(val, 0.0)


def l_divergence(q, p) -> float:
    """``L(q||p) = sum_{S(p)} p log q``, the per-letter log-likelihood of source q under p."""
    qw, pw = _pair(q, p)
    s = pw > 0
    if np.any(qw[s] <= 0):
        return NEG_INF
    return float(np.dot(pw[s], np.log(qw[s])))


def kerridge_inaccuracy(p, q) -> float:
    return -l_divergence(q, p)


def log_multiplicity(t: NType, exact: bool = False):
    """Number of length-n sequences with type ``t``.

    Returns the log (float) by default, or the integer itself when ``exact``.
    """
    if exact:
        out = math.factorial(t.n)
        for c in t.counts:
            out //= math.factorial(c)
        return out
    counts = np.asarray(t.counts, dtype=float)
    return float(gammaln(t.n + 1.0) - gammaln(counts + 1.0).sum())


def log_source_likelihood(t: NType, q) -> float:
    """``sum_i n_i log q_i``: log-probability of one particular sequence of type ``t``."""
    if isinstance(q, NType):
        if q.m != t.m:
            raise DimensionError(f"alphabet mismatch: {t.m} vs {q.m} letters")
        qw = np.array(q.counts, dtype=float) / q.n
    else:
        qw = as_weights(q)
        if qw.size != t.m:
            raise DimensionError(f"alphabet mismatch: {t.m} vs {qw.size} letters")
    c = np.asarray(t.counts, dtype=float)
    s = c > 0
    if np.any(qw[s] <= 0):
        return NEG_INF
    return float(np.dot(c[s], np.log(qw[s])))


def log_type_probability(t: NType, source) -> float:
    """Log-probability that i.i.d. draws from ``source`` produce type ``t``."""
    ll = log_source_likelihood(t, source)
    if ll == NEG_INF:
        return NEG_INF
    return log_multiplicity(t) + ll


def lambda_score(q, t: NType, prior_logmass: float, n: int | None = None) -> float:
    """Prior-adjusted L-divergence ``L(q||t) + log(prior mass)/n``."""
    n = t.n if n is None else n
    if prior_logmass == NEG_INF:
        return NEG_INF
    lv = l_divergence(q, t)
    if lv == NEG_INF:
        return NEG_INF
    return lv + prior_logmass / n


def exact_type_probability(t: NType, source) -> Fraction:
    """Exact ``Gamma(t) prod source_i**n_i`` for a rational source."""
    src = as_exact(source)
    if len(src) != t.m:
        raise DimensionError(f"alphabet mismatch: {t.m} vs {len(src)} letters")
    out = Fraction(log_multiplicity(t, exact=True))
    for c, r in zip(t.counts, src):
        if c:
            out *= r**c
    return out
