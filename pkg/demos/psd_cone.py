"""
=========================================
Second subderivative of the PSD-cone indicator
=========================================

The indicator of the negative semidefinite cone at a diagonal point. The
closed form picks up a curvature term ``-2 <v, w x^+ w>`` from the
pseudo-inverse of ``x``; the oracle recovers it when ``w`` is small
against the eigenvalue gap of ``x``.
"""
import numpy as np

from epidiff import instances as inst
from epidiff.oracle import agrees

P = inst.psd_cone_instance(3)
x = np.diag([0.0, -1.0, -2.0])
v = np.diag([1.0, 0.0, 0.0])
w = np.zeros((3, 3))
w[0, 1] = w[1, 0] = 1.0

print("closed form at the diagonal example:", P.second_subderivative(x, v, w))
for s in (0.5, 0.25, 0.1):
    e = P.oracle_second_subderivative(x, v, s * w)
    c = P.second_subderivative(x, v, s * w)
    print(f"scale {s:<5} closed form {c:.6f}  oracle {e.value:.6f}  agree {agrees(c, e, 1e-4, 1e-2)}")

rng = np.random.default_rng(3)
print("\nrandom critical triples:")
for _ in range(3):
    xb, vb, wb = inst.random_psd_critical_triple(3, rng)
    print(f"  d2 = {P.second_subderivative(xb, vb, wb):.6f}")
