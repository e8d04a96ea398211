"""Finite partitions of a continuous alphabet and the partition-wise L-divergence.

The supremum over *all* m-cell partitions is not computable; :func:`l_m_divergence`
takes an explicit list and returns the best value over it, which is a lower
bound on the full supremum.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import NType, Pmf, as_fraction
from .divergence import l_divergence


@dataclass(frozen=True)
class PartitionSpec:
    """Cells of the real line cut at increasing ``edges``.

    Cell 0 is ``(-inf, e_1)``, cell ``i`` is ``[e_i, e_{i+1})`` and the last is
    ``[e_k, inf)``.  A labeled partition instead gives ``membership(y) -> cell``
    and the number of cells ``size``.
    """

    edges: tuple = ()
    membership: Callable | None = None
    size: int | None = None

    def __post_init__(self):
        if self.membership is not None:
            if self.size is None or self.size < 2:
                raise ValueError("a labeled partition needs size >= 2")
            return
        edges = tuple(as_fraction(e) for e in self.edges)
        if len(edges) < 1:
            raise ValueError("a partition needs at least two cells")
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise ValueError("edges must be strictly increasing")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "size", len(edges) + 1)

    @property
    def m(self) -> int:
        return self.size

    def cell_of(self, y) -> int:
        if self.membership is not None:
            i = int(self.membership(y))
            if not 0 <= i < self.size:
                raise ValueError(f"membership returned {i} outside 0..{self.size - 1}")
            return i
        return bisect.bisect_right([float(e) for e in self.edges], float(y))

    def cell_masses(self, cdf: Callable[[float], float]) -> np.ndarray:
        """Cell masses of a distribution with continuous cdf ``cdf``."""
        if self.membership is not None:
            raise ValueError("cell masses from a cdf need an interval partition")
        cuts = [0.0] + [float(cdf(float(e))) for e in self.edges] + [1.0]
        return np.diff(cuts)

    def refine(self, extra_edges: Sequence) -> "PartitionSpec":
        edges = sorted(set(self.edges) | {as_fraction(e) for e in extra_edges})
        return PartitionSpec(tuple(edges))


def quantize(cell_masses, partition: PartitionSpec, tolerance: float = 1e-12) -> Pmf:
    """The partition-quantized distribution as a pmf on ``{0..m-1}``."""
    w = np.asarray(cell_masses, dtype=float)
    if w.size != partition.m:
        raise ValueError(f"{w.size} masses for a partition with {partition.m} cells")
    return Pmf(w, tolerance)


def empirical_type(samples, partition: PartitionSpec) -> NType:
    """Counts of ``samples`` per cell."""
    counts = [0] * partition.m
    for y in samples:
        counts[partition.cell_of(y)] += 1
    return NType(tuple(counts))


def l_m_divergence(q_masses, p_masses, partitions: Sequence[PartitionSpec]) -> float:
    """Largest ``L(Q^T||P^T)`` over the listed partitions.

    ``q_masses[i]`` and ``p_masses[i]`` are the cell masses of Q and P on ``partitions[i]``.
    """
    if not partitions:
        raise ValueError("need at least one partition")
    if not (len(q_masses) == len(p_masses) == len(partitions)):
        raise ValueError("one mass vector per partition is required for both Q and P")
    best = -math.inf
    for qm, pm, part in zip(q_masses, p_masses, partitions):
        best = max(best, l_divergence(quantize(qm, part), quantize(pm, part)))
    return best


def l_m_divergence_cdf(q_cdf, p_cdf, partitions: Sequence[PartitionSpec]) -> float:
    """:func:`l_m_divergence` with cell masses taken from cdfs."""
    return l_m_divergence(
        [part.cell_masses(q_cdf) for part in partitions],
        [part.cell_masses(p_cdf) for part in partitions],
        partitions,
    )
