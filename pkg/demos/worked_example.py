"""Mean-constrained sources on {1,2,3,4} after observing the type [1,1,1,7]/10.

The observed type has mean 3.4, so the set of sources with mean 1.7 is
rare.  We locate its most likely member (the L-projection), then watch the
posterior pile up around it as the same type is observed with larger n.
"""
import numpy as np

from ldsources import LinearFamily, k_equivalent, map_source
from ldsources.posterior import colt_series
from ldsources.projection import l_projection_linear
from ldsources.specfile import load_spec

spec = load_spec()
t0 = spec.type
print(f"observed type {t0}, mean {np.dot(t0.pmf().weights, [1, 2, 3, 4]):.2f}")

res = l_projection_linear(t0.pmf(), LinearFamily.mean((1, 2, 3, 4), "17/10"))
print("L-projection:", np.round(res.weights, 3), f"theta = {res.theta[0]:.6f}")
# the member q = p / (1 - theta (x - a)) needs positive denominators
print("denominators:", np.round(res.family_member.denominators(), 4))

print("\nposterior mass of the ball of radius 1/10 around the projection")
for rep in colt_series(spec.set, t0, spec.epsilon, spec.ks):
    print(f"  n = {rep.n:3d}  ({rep.count_numerator:5d} of {rep.count_denominator:5d} sources)  {rep.probability:.4f}")

print("\nMAP sources (they approach the projection)")
for k in spec.ks:
    q = map_source(spec.set, k_equivalent(t0, k))
    print(f"  n = {q.n:3d}  {q}  ->  {np.round(q.pmf().weights, 3)}")
