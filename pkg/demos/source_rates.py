"""Exponential decay of the posterior of a rare source set.

For each n we print the empirical rate (1/n) log pi(Q | type), its
finite-n sandwich, and the limit L(Q||p) - L(P||p).  The static series
repeats one observed type; the dynamic one rounds a fixed pmf p with
awkward coordinates to each n.
"""
from fractions import Fraction

from ldsources.core import LinearEq
from ldsources.posterior import decay_series, dynamic_decay_series
from ldsources.specfile import load_spec


def show(entries):
    for e in entries:
        print(f"  n = {e.n:3d}  {e.lower:+.4f} <= {e.rate:+.4f} <= {e.upper:+.4f}   limit {e.limit:+.4f}  |err| {e.error:.4f}")


spec = load_spec()
print("static: type [1,1,1,7]/10 repeated k times")
show(decay_series(spec.set, spec.type, spec.ks))

p = [Fraction(1, 7), Fraction(1, 11), Fraction(1, 13), Fraction(690, 1001)]
print("\ndynamic: types rounded from p =", [str(x) for x in p])
show(dynamic_decay_series(LinearEq((1, 2, 3, 4), "17/10"), [float(x) for x in p], [50, 100, 200, 300]))
