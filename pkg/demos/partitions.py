"""Continuous data seen through finite partitions.

Two normal laws are compared through interval partitions.  Each partition
turns them into pmfs on a few cells, and the best value over the list
bounds the partition-wise L-divergence from below.
"""
import numpy as np
from scipy import stats

from ldsources.partitions import PartitionSpec, empirical_type, l_m_divergence_cdf

Q, P = stats.norm(0.5, 1.0), stats.norm(0.0, 1.0)
parts = [PartitionSpec((0,)), PartitionSpec((-1, 1)), PartitionSpec((-1, 0, 1)), PartitionSpec((0.25,))]
for part in parts:
    print(f"  edges {[str(e) for e in part.edges]!s:24s}  L = {l_m_divergence_cdf(Q.cdf, P.cdf, [part]):+.4f}")
print(f"best over the list: {l_m_divergence_cdf(Q.cdf, P.cdf, parts):+.4f}")

rng = np.random.default_rng(0)
t = empirical_type(P.rvs(size=1000, random_state=rng), parts[2])
print("type of 1000 draws of P on", [str(e) for e in parts[2].edges], ":", t)
