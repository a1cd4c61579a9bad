"""
===================================
Parabolic regularity on q-order cones
===================================

For the indicator of ``{x : x_0 >= ||x_{1:}||_q}`` we walk through the four
geometric cases (interior, apex with zero and nonzero direction, boundary)
and print both sides of the parabolic regularity identity.
"""
import numpy as np

from epidiff import instances as inst

for q in (1.5, 2.0, 3.0):
    cf = inst.qcone_indicator(3, q)
    xb = inst.qcone_boundary_point(np.array([0.6, 0.8]), q)
    p = q / (q - 1)
    print(f"q = {q}")
    cases = {
        "interior": (np.array([2.0, 0.5, 0.5]), np.zeros(3), np.array([1.0, -1.0, 0.3])),
        "apex, w = 0": (np.zeros(3), np.array([-2.0, 0.3, 0.3]), np.zeros(3)),
        "apex, w != 0": (np.zeros(3), np.zeros(3), np.array([1.0, 0.2, 0.2])),
    }
    # boundary: v is a negative multiple of the gradient of x_{1:} -> ||x_{1:}||_q - x_0
    g = np.sign(xb[1:]) * np.abs(xb[1:]) ** (q - 1) / inst.qnorm(xb[1:], q) ** (q - 1)
    v = np.concatenate([[-1.0], g])
    t = np.array([g[1], -g[0]])  # tangent to the level set of the q-norm
    cases["boundary"] = (xb, v, np.concatenate([[float(t @ g)], t]))
    for name, (x, v, w) in cases.items():
        r = cf.check_parabolic_regularity(x, v, w, seed=1)
        print(f"  {name:<14} lhs = {r.lhs:+.6f}  rhs = {r.rhs:+.6f}  value = {r.value:+.6f}  {r.verdict}")
