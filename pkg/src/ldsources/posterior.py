"""Posterior probabilities of source sets and the finite-n side of the limit theorems.

Sources side: given an observed type ``t`` and a prior on n-sources, the
posterior weight of the source ``q`` is proportional to
``prior(q) * prod_i q_i ** t_i``; the multiplicity of ``t`` is common to all
sources and cancels.  Types side: the probability of a set of types under a
fixed source ``r`` keeps the multiplicity.

All sums run chunk by chunk over the exact enumeration and are merged with
log-sum-exp in stream order, so the result does not depend on ``jobs``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import gammaln

from .core import (
    DEFAULT_BALL,
    SIMPLEX,
    Ball,
    Intersection,
    NType,
    Pmf,
    PriorSpec,
    SourceSetSpec,
    as_exact,
    as_weights,
    evaluate_set,
    flatten,
    is_polyhedral,
)
from .divergence import NEG_INF, entropy, l_divergence, logsumexp
from .enumeration import EnumerationPlan, QuantizedPrior, k_equivalent, map_chunks, quantize_prior, round_to_type
from .projection import i_projection, l_projection

TIE_WINDOW = 1e-9
SUPPORT_CHUNK = 4096


class ConditioningOnNullError(ZeroDivisionError):
    """The conditioning set has zero posterior (or zero probability under the source)."""


@dataclass(frozen=True)
class PosteriorReport:
    n: int
    log_numerator: float
    log_denominator: float
    probability: float
    k: int | None = None
    count_numerator: int = 0
    count_denominator: int = 0
    B: SourceSetSpec | None = None
    Q: SourceSetSpec | None = None


@dataclass(frozen=True)
class DecayEntry:
    n: int
    rate: float
    lower: float
    upper: float
    limit: float | None
    log_numerator: float = NEG_INF
    log_denominator: float = NEG_INF
    k: int | None = None
    best_q: float = NEG_INF  # L(Q_n||nu) or its prior-weighted analogue
    best_all: float = NEG_INF

    @property
    def gap(self) -> float:
        return self.upper - self.lower

    @property
    def error(self) -> float | None:
        if self.limit is None or not math.isfinite(self.rate):
            return None
        return abs(self.rate - self.limit)


# ---------------------------------------------------------------------------
# chunked sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _SourceWeights:
    """Log weight ``sum_i t_i log(c_i / n)`` (+ optional prior log-mass) of each source row."""

    t: tuple
    n: int

    def __call__(self, rows: np.ndarray) -> np.ndarray:
        table = np.full(self.n + 1, NEG_INF)
        table[1:] = np.log(np.arange(1, self.n + 1) / self.n)
        out = np.zeros(rows.shape[0])
        for i, ti in enumerate(self.t):
            if ti:
                out += ti * table[rows[:, i]]
        return out


@dataclass(frozen=True)
class _TypeWeights:
    """Log-probability ``log Gamma(c) + sum_i c_i log r_i`` of each type row under source ``r``."""

    log_r: tuple
    n: int

    def __call__(self, rows: np.ndarray) -> np.ndarray:
        out = np.full(rows.shape[0], gammaln(self.n + 1.0))
        out -= gammaln(rows + 1.0).sum(axis=1)
        for i, lr in enumerate(self.log_r):
            col = rows[:, i]
            if lr == NEG_INF:
                out[col > 0] = NEG_INF
            else:
                out += col * lr
        return out


@dataclass
class _ChunkResult:
    lse: float
    lse_b: float
    count: int
    count_b: int
    best: float
    best_b: float
    near_best: np.ndarray  # rows within TIE_WINDOW of the chunk maximum


@dataclass(frozen=True)
class _Sweep:
    weight: object
    B: SourceSetSpec | None
    n: int
    prior: QuantizedPrior | None = None
    keep_best: bool = False

    def __call__(self, rows: np.ndarray) -> _ChunkResult:
        m = rows.shape[1] if rows.ndim == 2 else 0
        if rows.shape[0] == 0:
            return _ChunkResult(NEG_INF, NEG_INF, 0, 0, NEG_INF, NEG_INF, np.zeros((0, m), dtype=np.int64))
        lw = self.weight(rows)
        if self.prior is not None and not self.prior.is_uniform:
            lw = lw + np.array([self.prior.log_mass(NType(tuple(r))) for r in rows.tolist()])
        best = float(lw.max())
        near = rows[lw >= best - TIE_WINDOW] if self.keep_best and best > NEG_INF else rows[:0]
        if self.B is not None:
            inb = self.B.mask(rows, self.n)
            lwb = lw[inb]
        else:
            inb = np.zeros(rows.shape[0], dtype=bool)
            lwb = lw[:0]
        return _ChunkResult(
            logsumexp(lw),
            logsumexp(lwb),
            int(rows.shape[0]),
            int(inb.sum()),
            best,
            float(lwb.max()) if lwb.size else NEG_INF,
            near,
        )


@dataclass
class _SweepTotal:
    lse: float
    lse_b: float
    count: int
    count_b: int
    best: float
    best_b: float
    near_best: np.ndarray


def _merge(parts: list) -> _SweepTotal:
    best = max((p.best for p in parts), default=NEG_INF)
    near = [p.near_best for p in parts if p.near_best.shape[0] and p.best >= best - TIE_WINDOW]
    near = np.vstack(near) if near else np.zeros((0, 0), dtype=np.int64)
    return _SweepTotal(
        logsumexp([p.lse for p in parts]),
        logsumexp([p.lse_b for p in parts]),
        sum(p.count for p in parts),
        sum(p.count_b for p in parts),
        best,
        max((p.best_b for p in parts), default=NEG_INF),
        near,
    )


class _RowsPlan:
    """Chunked view of an explicit row list (the support of an atom prior)."""

    def __init__(self, rows: np.ndarray):
        self.rows = rows

    def chunk_keys(self):
        return list(range(0, max(self.rows.shape[0], 1), SUPPORT_CHUNK))

    def chunk(self, key):
        return self.rows[key : key + SUPPORT_CHUNK]


def _source_sweep(Q, t: NType, qprior: QuantizedPrior, B=None, jobs=1, keep_best=False) -> _SweepTotal:
    n, m = t.n, t.m
    Q = SIMPLEX if Q is None else Q
    fn = _Sweep(_SourceWeights(t.counts, n), B, n, qprior, keep_best)
    if qprior.is_uniform:
        plan = EnumerationPlan(n, m, Q if flatten(Q) or not isinstance(Q, Intersection) else None)
    else:
        rows = qprior.support_array()
        if rows.shape[0] and (flatten(Q) or not isinstance(Q, Intersection)):
            rows = rows[Q.mask(rows, n)]
        plan = _RowsPlan(rows)
    return _merge(map_chunks(fn, plan, jobs))


def _quantized(prior: PriorSpec | QuantizedPrior | None, n: int, m: int) -> QuantizedPrior:
    if prior is None:
        return QuantizedPrior(n, m, None)
    if isinstance(prior, QuantizedPrior):
        if prior.n != n or prior.m != m:
            raise ValueError(f"quantized prior is for n={prior.n}, m={prior.m}")
        return prior
    return quantize_prior(prior, n, m)


def _is_whole(Q) -> bool:
    return Q is None or (isinstance(Q, Intersection) and not flatten(Q))


# ---------------------------------------------------------------------------
# sources side
# ---------------------------------------------------------------------------


def posterior_prob(B: SourceSetSpec, Q: SourceSetSpec | None, t: NType, prior=None, jobs: int = 1) -> PosteriorReport:
    """Posterior probability that the n-source lies in ``B`` given it lies in ``Q`` and produced ``t``."""
    qp = _quantized(prior, t.n, t.m)
    tot = _source_sweep(Q, t, qp, B=B, jobs=jobs)
    if tot.lse == NEG_INF:
        raise ConditioningOnNullError(f"no n-source in the conditioning set has positive posterior (n={t.n})")
    prob = math.exp(tot.lse_b - tot.lse) if tot.lse_b > NEG_INF else 0.0
    return PosteriorReport(
        t.n, tot.lse_b, tot.lse, min(prob, 1.0), None, tot.count_b, tot.count, B, Q
    )


def _exact_key(row, t: NType, qprior: QuantizedPrior):
    val = 1
    for c, ti in zip(row, t.counts):
        val *= int(c) ** ti
    if qprior.is_uniform:
        return Fraction(val)
    return Fraction(qprior.mass(NType(tuple(int(c) for c in row)))) * val


def map_source(Q: SourceSetSpec | None, t: NType, prior=None, jobs: int = 1, with_mass: bool = False):
    """The n-source in ``Q`` with the largest posterior; ties go to the first in stream order.

    Near-ties in floating point are settled exactly with big-integer products.
    """
    qp = _quantized(prior, t.n, t.m)
    tot = _source_sweep(Q, t, qp, jobs=jobs, keep_best=True)
    if tot.count == 0 or tot.best == NEG_INF:
        raise ValueError("no n-source with positive posterior in the set")
    cand = tot.near_best
    best_row, best_key = None, None
    for row in cand.tolist():
        key = _exact_key(row, t, qp)
        if best_key is None or key > best_key:
            best_row, best_key = row, key
    src = NType(tuple(best_row))
    if not with_mass:
        return src
    lw = _SourceWeights(t.counts, t.n)(np.array([best_row], dtype=np.int64))[0]
    if not qp.is_uniform:
        lw += qp.log_mass(src)
    return src, math.exp(lw - tot.lse)


def _l_limit(Q, p) -> float | None:
    """``L(Q||p) - L(P||p)`` for a polyhedral ``Q`` with the whole simplex as ``P``."""
    if _is_whole(Q):
        return 0.0
    if not is_polyhedral(Q):
        return None
    res = l_projection(p, Q)
    return res.objective + entropy(p)


def _prior_limit(Q, p, prior: PriorSpec) -> float | None:
    """``L(Q^pi||p) - L(P^pi||p)`` over the finite support of an atom prior."""
    pw = as_weights(p)
    vals_all, vals_q = [], []
    for pt, _ in prior.atoms:
        v = l_divergence([float(x) for x in pt], pw)
        vals_all.append(v)
        if _is_whole(Q) or _exact_member(Q, pt):
            vals_q.append(v)
    if not vals_q:
        return NEG_INF
    return max(vals_q) - max(vals_all)


def _exact_member(Q, pt) -> bool:
    den = 1
    for c in pt:
        den = math.lcm(den, c.denominator)
    return evaluate_set(Q, NType(tuple(int(c * den) for c in pt)))


def source_decay_rate(
    Q: SourceSetSpec | None, t: NType, prior=None, limit_pmf=None, jobs: int = 1, k: int | None = None
) -> DecayEntry:
    """``(1/n) log pi(q in Q | t)`` with its finite-n sandwich bounds.

    The limit prediction is taken at ``limit_pmf`` (default: the induced pmf of ``t``).
    """
    n, m = t.n, t.m
    qp = _quantized(prior, n, m)
    full = _source_sweep(None, t, qp, jobs=jobs)
    sub = full if _is_whole(Q) else _source_sweep(Q, t, qp, jobs=jobs)
    rate = (sub.lse - full.lse) / n if sub.lse > NEG_INF else NEG_INF
    slack = m / n * math.log(n + 1)
    # with an atom prior these maxima are the prior-weighted scores L(q||t) + log(prior)/n
    best_q, best_all = sub.best / n, full.best / n
    centre = best_q - best_all
    p = limit_pmf if limit_pmf is not None else t.pmf()
    if prior is None or (isinstance(prior, PriorSpec) and prior.is_uniform) or (
        isinstance(prior, QuantizedPrior) and prior.is_uniform
    ):
        limit = _l_limit(Q, p)
    elif isinstance(prior, PriorSpec):
        limit = _prior_limit(Q, p, prior)
    else:
        limit = None
    return DecayEntry(
        n, rate, centre - slack, centre + slack, limit, sub.lse, full.lse, k, best_q, best_all
    )


def decay_series(Q, t0: NType, ks, prior=None, jobs: int = 1) -> list:
    """Static case: decay rates along the k-equivalent types of ``t0``."""
    return [source_decay_rate(Q, k_equivalent(t0, k), prior, t0.pmf(), jobs, k) for k in ks]


def dynamic_decay_series(Q, p, ns, prior=None, jobs: int = 1) -> list:
    """Dynamic case: decay rates along rounded types of ``p``."""
    return [source_decay_rate(Q, round_to_type(p, n), prior, p, jobs) for n in ns]


def l_projection_target(Q, p, prior=None) -> Pmf:
    """Centre of the concentration ball: the L-projection of ``p`` on ``Q`` (or on ``Q`` within the prior's support)."""
    if prior is not None and isinstance(prior, PriorSpec) and not prior.is_uniform:
        pw = as_weights(p)
        best, best_pt = NEG_INF, None
        for pt, _ in prior.atoms:
            if _is_whole(Q) or _exact_member(Q, pt):
                v = l_divergence([float(x) for x in pt], pw)
                if v > best:
                    best, best_pt = v, pt
        if best_pt is None:
            raise ValueError("the prior puts no mass on the set")
        return Pmf([float(x) for x in best_pt], 1e-12)
    if _is_whole(Q):
        return Pmf(as_weights(p), 1e-9)
    return l_projection(p, Q).pmf


def colt_series(
    Q: SourceSetSpec,
    t0: NType,
    epsilon,
    ks,
    prior=None,
    convention: str = DEFAULT_BALL,
    jobs: int = 1,
    center=None,
    require_rare: bool = True,
) -> list:
    """Posterior mass of the ball around the L-projection, along k-equivalent types of ``t0``."""
    if require_rare and not _is_whole(Q) and evaluate_set(Q, t0):
        raise ValueError("the set contains the observed type, so it is not rare")
    q_hat = center if center is not None else l_projection_target(Q, t0.pmf(), prior)
    ball = Ball(as_exact(q_hat), epsilon, convention)
    out = []
    for k in ks:
        rep = posterior_prob(ball, Q, k_equivalent(t0, k), prior, jobs)
        out.append(_with_k(rep, k))
    return out


def colt_series_dynamic(
    Q: SourceSetSpec,
    p,
    epsilon,
    ns,
    prior=None,
    convention: str = DEFAULT_BALL,
    jobs: int = 1,
    require_rare: bool = True,
) -> list:
    """Posterior mass of the ball around the L-projection of ``p`` along rounded types of ``p``."""
    pw = as_weights(p)
    if require_rare and not _is_whole(Q) and evaluate_set(Q, pw):
        raise ValueError("the set contains the limit pmf, so it is not rare")
    q_hat = l_projection_target(Q, pw, prior)
    ball = Ball(as_exact(q_hat), epsilon, convention)
    return [posterior_prob(ball, Q, round_to_type(pw, n), prior, jobs) for n in ns]


def llln_series(t0: NType, epsilon, ks, convention: str = DEFAULT_BALL, jobs: int = 1) -> list:
    """Unconditional concentration of the posterior on the observed type itself."""
    return colt_series(SIMPLEX, t0, epsilon, ks, None, convention, jobs, center=t0.pmf(), require_rare=False)


def _with_k(rep: PosteriorReport, k) -> PosteriorReport:
    return PosteriorReport(
        rep.n, rep.log_numerator, rep.log_denominator, rep.probability, k,
        rep.count_numerator, rep.count_denominator, rep.B, rep.Q,
    )


def check_static_schedule(n0: int, ns) -> list:
    """Convert requested sample sizes to multipliers of ``n0``; static statements only hold on that subsequence."""
    ks = []
    for n in ns:
        if n % n0:
            raise ValueError(
                f"n={n} is not a multiple of n0={n0}; static results hold only along n = k*n0"
            )
        ks.append(n // n0)
    return ks


# ---------------------------------------------------------------------------
# types side
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TypesRateEntry:
    n: int
    log_probability: float
    rate: float
    limit: float | None
    count: int = 0

    @property
    def error(self) -> float | None:
        if self.limit is None or not math.isfinite(self.rate):
            return None
        return abs(self.rate - self.limit)


def _types_sweep(Pi, r, n, B=None, jobs=1) -> _SweepTotal:
    rw = as_weights(r)
    log_r = tuple(math.log(x) if x > 0 else NEG_INF for x in rw)
    plan = EnumerationPlan(n, rw.size, None if _is_whole(Pi) else Pi)
    return _merge(map_chunks(_Sweep(_TypeWeights(log_r, n), B, n), plan, jobs))


def _full_support(r) -> np.ndarray:
    rw = as_weights(r)
    if np.any(rw <= 0):
        raise ValueError("the source must give every letter positive probability")
    return rw


def type_probability_set(Pi: SourceSetSpec | None, r, n: int, jobs: int = 1, limit: float | None = None) -> TypesRateEntry:
    """Probability that ``r`` emits an n-type in ``Pi``, its rate, and the rate predicted by the I-projection."""
    rw = _full_support(r)
    tot = _types_sweep(Pi, rw, n, jobs=jobs)
    if limit is None:
        if _is_whole(Pi):
            limit = 0.0
        elif is_polyhedral(Pi):
            limit = -i_projection(rw, Pi).objective
    rate = tot.lse / n if tot.lse > NEG_INF else NEG_INF
    return TypesRateEntry(n, tot.lse, rate, limit, tot.count)


def types_rate_series(Pi, r, ns, jobs: int = 1) -> list:
    rw = _full_support(r)
    limit = 0.0 if _is_whole(Pi) else (-i_projection(rw, Pi).objective if is_polyhedral(Pi) else None)
    return [type_probability_set(Pi, rw, n, jobs, limit) for n in ns]


def colt_types(Pi: SourceSetSpec, r, epsilon, ns, convention: str = DEFAULT_BALL, jobs: int = 1) -> list:
    """Conditional probability that the type lies near the I-projection of ``r`` on ``Pi``."""
    rw = _full_support(r)
    p_hat = i_projection(rw, Pi).pmf if not _is_whole(Pi) else Pmf(rw, 1e-9)
    ball = Ball(as_exact(p_hat), epsilon, convention)
    out = []
    for n in ns:
        tot = _types_sweep(Pi, rw, n, B=ball, jobs=jobs)
        if tot.lse == NEG_INF:
            raise ConditioningOnNullError(f"no {n}-type in the set")
        prob = math.exp(tot.lse_b - tot.lse) if tot.lse_b > NEG_INF else 0.0
        out.append(PosteriorReport(n, tot.lse_b, tot.lse, min(prob, 1.0), None, tot.count_b, tot.count, ball, Pi))
    return out


def i_limit(Pi, r) -> float:
    """``-I(Pi||r)``."""
    return -i_projection(as_weights(r), Pi).objective


__all__ = [
    "ConditioningOnNullError",
    "DecayEntry",
    "PosteriorReport",
    "TypesRateEntry",
    "check_static_schedule",
    "colt_series",
    "colt_series_dynamic",
    "colt_types",
    "decay_series",
    "dynamic_decay_series",
    "i_limit",
    "l_projection_target",
    "llln_series",
    "map_source",
    "posterior_prob",
    "source_decay_rate",
    "type_probability_set",
    "types_rate_series",
]
