"""Maximizing lambda_2 Vol^{2/m} over conformal factors.

`two_bubble` builds the degenerating family whose volume splits into two
round spheres; `maximize` is a seeded derivative-free ascent over harmonic
coefficients.
"""

import json
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .discretize import ConformalMetric, assemble
from .eigensolve import EigensolveError, normalized_eigenvalue, solve_bottom
from .geometry import mobius_conformal_factor, sphere_point
from .harmonics import all_labels, basis_matrix
from .verify import sharp_bound

log = logging.getLogger(__name__)


def concentration(s):
    """Möbius parameter s / (1 + s) in [0, 1) for a concentration s >= 0."""
    if s < 0:
        raise ValueError("concentration must be >= 0")
    return s / (1.0 + s)


def two_bubble_density(y, s, axis):
    """Sum of the densities of (T_{a})_* sigma and (T_{-a})_* sigma, a = s' axis.

    Integrates to 2 sigma_m over the round sphere.
    """
    axis = sphere_point(axis)
    m = len(axis) - 1
    a = concentration(s) * axis
    return mobius_conformal_factor(-a, y) ** m + mobius_conformal_factor(a, y) ** m


def two_bubble(s, mesh, axis=None):
    """Nodal metric with e^{m phi} equal to the two-bubble density.

    s = 0 is the round metric with volume 2 sigma_m (phi = ln(2)/m).
    """
    m = mesh.m
    if axis is None:
        axis = np.eye(m + 1)[-1]
    rho = two_bubble_density(mesh.vertices, s, axis)
    return ConformalMetric(m, "nodal", np.log(rho) / m, mesh)


def objective(g, mesh, k=2):
    """lambda_k Vol^{2/m} together with lambda_1 Vol^{2/m}."""
    res = solve_bottom(assemble(g, mesh), K=max(3, k + 1))
    return normalized_eigenvalue(res, k, mesh.m), normalized_eigenvalue(res, 1, mesh.m)


def ladder(mesh, s_values, axis=None):
    """lambda_2 Vol^{2/m} along the two-bubble family."""
    return [objective(two_bubble(s, mesh, axis), mesh)[0] for s in s_values]


@dataclass
class OptimizationRun:
    degree: int
    history: list = field(default_factory=list)   # dicts, one per evaluation
    best_value: float = -np.inf
    best_coeffs: np.ndarray = None
    termination: str = ""

    def best_so_far(self):
        return np.maximum.accumulate([h["objective"] for h in self.history])

    def to_jsonl(self):
        return "".join(json.dumps(h) + "\n" for h in self.history)


def _harmonic_perturbation(mesh, L):
    B = basis_matrix(mesh.vertices, L)
    return B[:, 1:]  # the constant mode only rescales


def maximize(mesh, L=2, budget=200, start=None, seed=0, step=0.25, min_step=1e-3,
             penalty=-np.inf):
    """Seeded compass search on phi = phi_start + sum a_lk Y_lk (1 <= l <= L).

    Every evaluation solves the eigenproblem.  Poll directions are the
    coordinate axes in a seeded random order.  The step halves after a full
    unsuccessful poll; the run stops when the budget is spent or the step
    falls below `min_step`.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    m = mesh.m
    rng = np.random.default_rng(seed)
    base = np.zeros(mesh.n_vertices) if start is None else start.phi_on(mesh)
    B = _harmonic_perturbation(mesh, L)
    run = OptimizationRun(L)
    bound = sharp_bound(m)

    def evaluate(a):
        t0 = time.perf_counter()
        g = ConformalMetric(m, "nodal", base + B @ a, mesh)
        try:
            lam2, lam1 = objective(g, mesh)
        except EigensolveError as exc:
            log.warning("eigensolve failed (%s); penalized", exc)
            lam2, lam1 = penalty, float("nan")
        run.history.append({
            "coefficients": a.tolist(),
            "objective": lam2,
            "lambda1_vol": lam1,
            "lambda2_vol": lam2,
            "ratio_to_bound": lam2 / bound,
            "wall_time": time.perf_counter() - t0,
        })
        if lam2 > run.best_value:
            run.best_value, run.best_coeffs = lam2, a.copy()
        return lam2

    x = np.zeros(B.shape[1])
    fx = evaluate(x)
    h = step
    n = len(x)
    while len(run.history) < budget:
        improved = False
        for i in rng.permutation(n):
            for sgn in (1.0, -1.0):
                if len(run.history) >= budget:
                    break
                y = x.copy()
                y[i] += sgn * h
                fy = evaluate(y)
                if fy > fx:
                    x, fx, improved = y, fy, True
                    break
        if not improved:
            h *= 0.5
            if h < min_step:
                run.termination = "step below tolerance"
                break
    else:
        run.termination = "budget exhausted"
    return run


def harmonic_labels(m, L):
    return all_labels(m, L)[1:]
