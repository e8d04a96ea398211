"""A prior with four candidate sources instead of the uniform one.

Each atom is moved to its nearest n-source; the posterior then only ranges
over those cells.  The decay rate tends to the best prior-supported score
inside the set minus the best one overall.
"""
from pathlib import Path

from ldsources import map_source
from ldsources.enumeration import k_equivalent, quantize_prior
from ldsources.posterior import colt_series, decay_series
from ldsources.specfile import load_spec

spec = load_spec(Path(__file__).resolve().parents[1] / "specs" / "prior_demo.spec")
t0 = spec.type
for pt, w in spec.prior.atoms:
    print("atom", [str(x) for x in pt], f"weight {w:.2f}")

print("\nquantized at n = 20:", {str(k): v for k, v in quantize_prior(spec.prior, 20, spec.m).masses.items()})
for e, c in zip(decay_series(spec.set, t0, spec.ks, spec.prior), colt_series(spec.set, t0, spec.epsilon, spec.ks, spec.prior)):
    q = map_source(spec.set, k_equivalent(t0, e.k), spec.prior)
    print(f"  n = {e.n:2d}  rate {e.rate:+.4f} (limit {e.limit:+.4f})  MAP {q}  ball mass {c.probability:.4f}")
