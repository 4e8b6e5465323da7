"""
Moebius maps, caps and the center of mass
=========================================

Every finite measure on S^m without heavy atoms can be moved by a Moebius
transformation so that its barycenter is the origin.  Folding the measure
into a cap first gives a center for each cap.
"""

import numpy as np

from lambda2sphere.discretize import build_mesh, random_harmonic_metric, volume_measure
from lambda2sphere.geometry import Cap, fold, mobius, reflect
from lambda2sphere.measures import center_of_mass, folded_center

e1, e2, e3 = np.eye(3)

# T_x pushes points away from -x and towards x/|x|.
print("T_{0.5 e1}(e2) =", mobius(0.5 * e1, e2))

# The cap H_{p,t} is y.p <= 2t/(1+t^2).  Folding reflects the outside across
# the boundary circle, so everything lands in the cap.
cap = Cap(e3, 0.4)
y = np.array([0.0, 0.6, 0.8])
print(f"height {cap.height:.4f}; y.p = {y @ e3:.2f}; fold(y).p = {fold(cap, y) @ e3:.4f}")

# A conformal metric gives a volume measure with atoms at the mesh vertices.
mesh = build_mesh(2, 4)
g = random_harmonic_metric(np.random.default_rng(0), 2, 4)
mu = volume_measure(g, mesh)
com = center_of_mass(mu, tol=1e-12)
print(f"Vol = {mu.mass:.4f}; center {np.round(com.c, 5)} after {com.iterations} Newton steps")

# After recentering, the coordinate functions have mean zero.
z = mobius(-com.c, mu.points)
print("mean of recentred coordinates:", np.abs(mu.weights @ z).max() / mu.mass)

# Centers of folded measures move continuously with the cap, and reversing
# the hemisphere reflects the center.
for t in (0.0, 0.5, 0.9, 0.999):
    c = folded_center(mu, Cap(e3, t), tol=1e-12).c
    print(f"t = {t:<5} center {np.round(c, 4)}")
a = folded_center(mu, Cap(-e3, 0.0), tol=1e-12).c
b = reflect(e3, folded_center(mu, Cap(e3, 0.0), tol=1e-12).c)
print("c(-p, 0) - R_p c(p, 0):", np.linalg.norm(a - b))
