"""
The spectrum of the round sphere
================================

Mesh S^2 and S^3, assemble the conformal Galerkin pair and compare the
lowest eigenvalues with k(k + m - 1).
"""

import numpy as np

from lambda2sphere.discretize import ConformalMetric, assemble, build_mesh
from lambda2sphere.eigensolve import normalized_eigenvalue, solve_bottom
from lambda2sphere.verify import round_value, sharp_bound

# A level-4 icosphere has 10 * 4^4 + 2 = 2562 vertices.
mesh = build_mesh(2, 4)
print(f"S^2 mesh: {mesh.n_vertices} vertices, {len(mesh.cells)} triangles, h = {mesh.h:.3f}")

# The round metric is phi = 0.  Stiffness and lumped mass give a generalized
# eigenproblem whose bottom is 0, then 2 three times, then 6 five times.
res = solve_bottom(assemble(ConformalMetric.round(2), mesh), K=9)
print("eigenvalues:", np.array2string(res.eigenvalues, precision=4))

# The scale-free quantity lambda_k Vol.  On the round sphere lambda_1 = lambda_2,
# so both sit at 8 pi, half of the sharp bound 16 pi for lambda_2.
for k in (1, 2):
    print(f"lambda_{k} Vol = {normalized_eigenvalue(res, k, 2):.4f}")
print(f"8 pi = {round_value(2):.4f}, 16 pi = {sharp_bound(2):.4f}")

# Scaling the metric by 4 (phi = ln 2) quarters every eigenvalue and leaves
# lambda_k Vol alone.
scaled = solve_bottom(assemble(ConformalMetric.constant(2, np.log(2)), mesh), K=3)
print("scaled / round:", np.array2string(scaled.eigenvalues[1:] / res.eigenvalues[1:4], precision=6))

# On S^3 the mesh is the refined boundary of the 16-cell, and lambda_1 = 3
# with multiplicity 4.
mesh3 = build_mesh(3, 3)
res3 = solve_bottom(assemble(ConformalMetric.round(3), mesh3), K=5)
print(f"S^3 mesh: {mesh3.n_vertices} vertices; eigenvalues",
      np.array2string(res3.eigenvalues, precision=4))
