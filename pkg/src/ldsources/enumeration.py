"""Enumeration of n-sources, type sequences and quantized priors.

Sources come out in lexicographically descending order of their count
vectors (``[2,0], [1,1], [0,2]``), split into chunks by the first count so
that chunks can be processed independently and merged in a fixed order.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .core import (
    DimensionError,
    Intersection,
    LinearEq,
    NType,
    PriorSpec,
    SourceSetSpec,
    as_exact,
    flatten,
)


def count_sources(n: int, m: int) -> int:
    """Number of n-rational pmfs on m letters, ``C(n+m-1, m-1)``."""
    return math.comb(n + m - 1, m - 1)


def compositions(total: int, parts: int) -> np.ndarray:
    """All non-negative integer vectors of length ``parts`` summing to ``total``, lex-descending."""
    if parts < 1:
        raise ValueError("parts must be >= 1")
    if parts == 1:
        return np.array([[total]], dtype=np.int64)
    if parts == 2:
        head = np.arange(total, -1, -1, dtype=np.int64)
        return np.stack([head, total - head], axis=1)
    blocks = []
    for v in range(total, -1, -1):
        rest = compositions(total - v, parts - 1)
        blocks.append(np.hstack([np.full((rest.shape[0], 1), v, dtype=np.int64), rest]))
    return np.vstack(blocks)


@dataclass(frozen=True)
class EnumerationPlan:
    """All n-sources on m letters, optionally restricted to ``filter``.

    A linear equality in the filter is solved for the last two coordinates
    instead of being tested after the fact; the emitted set is identical.
    """

    n: int
    m: int
    filter: SourceSetSpec | None = None
    _pushed: LinearEq | None = field(default=None, init=False, repr=False, compare=False)
    _rest: SourceSetSpec | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("need n >= 1 and m >= 1")
        if self.filter is None:
            return
        d = self.filter.dim()
        if d is not None and d != self.m:
            raise DimensionError(f"filter over {d} letters, plan over {self.m}")
        atoms = flatten(self.filter)
        if not isinstance(self.filter, Intersection):
            atoms = (self.filter,)
        pushed = None
        if self.m >= 3:
            for atom in atoms:
                if isinstance(atom, LinearEq) and atom._ui[-2] != atom._ui[-1]:
                    pushed = atom
                    break
        rest = tuple(a for a in atoms if a is not pushed)
        object.__setattr__(self, "_pushed", pushed)
        object.__setattr__(self, "_rest", Intersection(rest) if rest else None)

    @property
    def total(self) -> int:
        """Size of the unfiltered stream."""
        return count_sources(self.n, self.m)

    def chunk_keys(self) -> list:
        if self.m <= 2:
            return [None]
        return list(range(self.n, -1, -1))

    def chunk(self, key) -> np.ndarray:
        """Counts (rows) of the members of one chunk, in stream order."""
        n, m = self.n, self.m
        if key is None:
            rows = compositions(n, m)
        elif self._pushed is not None:
            rows = self._solve_pushed(key)
        else:
            rest = compositions(n - key, m - 1)
            rows = np.hstack([np.full((rest.shape[0], 1), key, dtype=np.int64), rest])
        if self.filter is not None and key is None and self._pushed is None:
            return rows[self.filter.mask(rows, n)]
        if self._rest is not None and rows.shape[0]:
            rows = rows[self._rest.mask(rows, n)]
        return rows

    def _solve_pushed(self, c0: int) -> np.ndarray:
        n, m = self.n, self.m
        atom = self._pushed
        ui = atom._ui
        free = compositions(n - c0, m - 2)[:, : m - 3]
        bound = (max(abs(x) for x in ui) * 2 + abs(atom._ai) + 1) * (n + 1) * 4
        dt = np.int64 if bound < 2**62 else object
        free_d = free.astype(dt)
        rem = (n - c0) - free.sum(axis=1).astype(dt)
        rhs = atom._ai * n - ui[0] * c0 - ui[-1] * rem
        if m > 3:
            rhs = rhs - free_d @ np.array(ui[1 : m - 2], dtype=dt)
        piv = ui[-2] - ui[-1]
        c_second = rhs // piv
        ok = np.asarray((rhs % piv) == 0, dtype=bool)
        ok &= np.asarray(c_second >= 0, dtype=bool) & np.asarray(c_second <= rem, dtype=bool)
        c_second = np.asarray(c_second[ok], dtype=np.int64)
        rem = np.asarray(rem[ok], dtype=np.int64)
        k = int(ok.sum())
        return np.hstack(
            [
                np.full((k, 1), c0, dtype=np.int64),
                free[ok].astype(np.int64),
                c_second[:, None],
                (rem - c_second)[:, None],
            ]
        )

    def chunks(self) -> Iterator[np.ndarray]:
        for key in self.chunk_keys():
            yield self.chunk(key)

    def __iter__(self) -> Iterator[NType]:
        for rows in self.chunks():
            for row in rows:
                yield NType(tuple(int(c) for c in row))

    def count(self) -> int:
        if self.filter is None:
            return self.total
        return sum(int(r.shape[0]) for r in self.chunks())

    def array(self) -> np.ndarray:
        parts = list(self.chunks())
        return np.vstack(parts) if parts else np.zeros((0, self.m), dtype=np.int64)


def enumerate_sources(plan: EnumerationPlan) -> Iterator[NType]:
    return iter(plan)


def _run_chunk(plan, key, fn):
    return fn(plan.chunk(key))


def map_chunks(fn: Callable[[np.ndarray], object], plan: EnumerationPlan, jobs: int = 1) -> list:
    """Apply ``fn`` to every chunk; results come back in stream order regardless of ``jobs``."""
    keys = plan.chunk_keys()
    if jobs <= 1 or len(keys) < 2:
        return [fn(plan.chunk(k)) for k in keys]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(_run_chunk, plan, k, fn) for k in keys]
        return [f.result() for f in futures]


def write_types(rows, fh) -> int:
    """Write one type per line as space-separated integer counts."""
    k = 0
    for row in rows:
        counts = row.counts if isinstance(row, NType) else row
        fh.write(" ".join(str(int(c)) for c in counts) + "\n")
        k += 1
    return k


def read_types(fh) -> list:
    out = []
    for line in fh:
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(NType(tuple(int(x) for x in line.split())))
    return out


def k_equivalent(base: NType, k: int) -> NType:
    """The type with every count multiplied by ``k``."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    return NType(tuple(k * c for c in base.counts))


def round_to_type(p, n: int) -> NType:
    """Largest-remainder rounding of ``n p`` to an n-type.

    Each coordinate lands within ``1/n`` of ``p`` and the result is the
    L1-nearest n-type; among equally near ones the lower letters get the
    extra counts.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    x = [c * n for c in as_exact(p)]
    floors = [math.floor(v) for v in x]
    rema = [v - f for v, f in zip(x, floors)]
    short = n - sum(floors)
    order = sorted(range(len(x)), key=lambda i: (-rema[i], i))
    counts = list(floors)
    if short >= 0:
        for i in order[:short]:
            counts[i] += 1
    else:
        for i in reversed(order):
            if short == 0:
                break
            if counts[i] > 0:
                counts[i] -= 1
                short += 1
    return NType(tuple(counts))


def nearest_source(point, n: int) -> NType:
    """Default quantization cell: the n-source nearest to ``point`` in variation distance."""
    return round_to_type(point, n)


@dataclass(frozen=True)
class QuantizedPrior:
    """Prior mass on the n-sources; ``masses is None`` means uniform over all of them."""

    n: int
    m: int
    masses: dict | None = None

    @property
    def is_uniform(self) -> bool:
        return self.masses is None

    def support(self) -> list:
        """Support sources in stream (lex-descending) order."""
        if self.masses is None:
            return list(EnumerationPlan(self.n, self.m))
        return sorted(self.masses, key=lambda t: t.counts, reverse=True)

    def support_array(self) -> np.ndarray:
        return np.array([t.counts for t in self.support()], dtype=np.int64).reshape(-1, self.m)

    def mass(self, t: NType) -> float:
        if self.masses is None:
            return 1.0 / count_sources(self.n, self.m)
        return self.masses.get(t, 0.0)

    def log_mass(self, t: NType) -> float:
        w = self.mass(t)
        return math.log(w) if w > 0 else -math.inf


def quantize_prior(prior: PriorSpec, n: int, m: int | None = None, strategy=nearest_source) -> QuantizedPrior:
    """Push a prior on rational pmfs onto the n-sources.

    Each atom's weight goes to the cell of ``strategy(atom, n)``; masses of
    atoms sharing a cell are added.
    """
    if prior.is_uniform:
        if m is None:
            raise ValueError("uniform prior needs the alphabet size m")
        return QuantizedPrior(n, m, None)
    dims = {len(pt) for pt, _ in prior.atoms}
    m_atoms = dims.pop()
    if m is not None and m != m_atoms:
        raise DimensionError(f"prior over {m_atoms} letters, expected {m}")
    masses: dict = {}
    for point, weight in prior.atoms:
        cell = strategy(point, n)
        masses[cell] = masses.get(cell, 0.0) + weight
    return QuantizedPrior(n, m_atoms, masses)


def uniform_atoms(n: int, m: int) -> PriorSpec:
    """Atom prior with equal weight on every n-source (matches the uniform prior at this n)."""
    pts = [t.fractions() for t in EnumerationPlan(n, m)]
    w = 1.0 / len(pts)
    return PriorSpec.from_atoms([(pt, w) for pt in pts])


__all__ = [
    "EnumerationPlan",
    "QuantizedPrior",
    "compositions",
    "count_sources",
    "enumerate_sources",
    "k_equivalent",
    "map_chunks",
    "nearest_source",
    "quantize_prior",
    "read_types",
    "round_to_type",
    "uniform_atoms",
    "write_types",
]
