"""
=====================================
A piecewise function that is not regular
=====================================

``h(t) = max{0, min{1, t}}`` has a kink at ``t = 1`` where the regular
subdifferential is empty. The plain second-order quotient still has a
closed form, but the epi-limit of the quotient with a subgradient term
runs off to minus infinity. This script shows both.
"""
import numpy as np

from epidiff import instances as inst
from epidiff.oracle import Schedule, estimate_second_subderivative

h = inst.staircase()

for t in (-1.0, 0.0, 0.5, 1.0, 2.0):
    print(f"h({t:+.1f}) = {h.eval([t]):.3f}   dh({t:+.1f})(+1) = {h.subderivative([t], [1.0]):.3f}"
          f"   dh({t:+.1f})(-1) = {h.subderivative([t], [-1.0]):.3f}")

print("\nsubdifferential at 1:", h.subdifferential([1.0]))
print("plain second-order value at 1 along +1:", h.second_subderivative_plain([1.0], [1.0]))
print("parabolic value at 1, w = -1, z = 5:", h.parabolic_subderivative([1.0], [-1.0], [5.0]))

# with the limiting subgradient v = 1 the quotient is -2 / tau on the flat side
est = estimate_second_subderivative(h.vec, [1.0], [1.0], [1.0], Schedule(seed=42), True)
print("\noracle level minima (v = 1, w = 1):")
for tau, m in zip(est.taus, est.level_minima):
    print(f"  tau = {tau:.2e}   min quotient = {m:.4g}")
print("trend_negative:", est.trend_negative)
