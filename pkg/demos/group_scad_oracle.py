"""
=======================================
Group SCAD: closed forms against the oracle
=======================================

A group penalty ``sum_j rho(||x_j||_q)`` with SCAD ``rho``. At a point with
one zero group and one group in the flat SCAD region, we compare the closed
form subderivative, second subderivative and parabolic subderivative with
the longdouble epi-limit oracle along random directions.
"""
import numpy as np

from epidiff import instances as inst
from epidiff.oracle import (Schedule, agrees, estimate_parabolic_subderivative,
                            estimate_second_subderivative, estimate_subderivative)

f = inst.group_scad([(0, 1), (2, 3)], 2.0, 1.0, 3.0)
x = np.array([0.0, 0.0, 1.5, 0.0])  # group 2 has norm 1.5, inside the concave piece
rng = np.random.default_rng(0)
sched = Schedule(seed=42)

print(f"f(x) = {f.f_eval(x):.6f}")
print(f"{'quantity':<24}{'closed form':>14}{'oracle':>14}  agree")
for k in range(4):
    w = rng.standard_normal(4)
    c = f.f_subderivative(x, w)
    e = estimate_subderivative(f.fast_eval, x, w, sched, True)
    print(f"{'df(x)(w) #%d' % k:<24}{c:>14.6f}{e.value:>14.6f}  {agrees(c, e, 1e-4)}")

# a subgradient: rho'(1.5) = 0.75 on the active group, zero on the null group
v = np.array([0.2, -0.1, 0.75, 0.0])
for k in range(4):
    # critical directions: the null group must stay put since |v_1| < lambda
    w = np.concatenate([[0.0, 0.0], rng.standard_normal(2)])
    c = f.f_second_subderivative(x, v, w)
    e = estimate_second_subderivative(f.fast_eval, x, v, w, sched, True)
    print(f"{'d2f(x|v)(w) #%d' % k:<24}{c:>14.6f}{e.value:>14.6f}  {agrees(c, e, 1e-5, 1e-2)}")

w = np.array([0.6, 0.8, 0.0, 1.0])
z = np.array([0.0, 0.0, 0.5, -0.3])
c = f.f_parabolic_subderivative(x, w, z)
e = estimate_parabolic_subderivative(f.fast_eval, x, w, f.f_subderivative(x, w), z, sched, True)
print(f"{'d2f(x)(w|z)':<24}{c:>14.6f}{e.value:>14.6f}  {agrees(c, e, 1e-5, 1e-2)}")
