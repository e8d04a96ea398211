"""The classical direction: a fair three-sided die and the rare event "mean >= 2.4".

The probability that the empirical type lands in the event decays at rate
I(Pi||r), the divergence of the I-projection, and conditionally on the
event the type concentrates near that projection.
"""
from pathlib import Path

import numpy as np

from ldsources.posterior import colt_types, types_rate_series
from ldsources.projection import i_projection
from ldsources.specfile import load_spec

spec = load_spec(Path(__file__).resolve().parents[1] / "specs" / "types_demo.spec")
r = [float(x) for x in spec.source]
proj = i_projection(r, spec.set)
print("I-projection:", np.round(proj.weights, 4), f"I = {proj.objective:.6f}")

ns = spec.sample_sizes()
for e, c in zip(types_rate_series(spec.set, r, ns), colt_types(spec.set, r, spec.epsilon, ns, spec.ball)):
    print(f"  n = {e.n:3d}  P = {np.exp(e.log_probability):.3e}  rate {e.rate:+.4f}  |rate + I| {e.error:.4f}  "
          f"ball mass {c.probability:.4f}")
