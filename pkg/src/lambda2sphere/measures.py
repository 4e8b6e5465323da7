"""Atomic measures on S^m and their Möbius (Hersch) center of mass.

The center of mass of mu is the point c of the open ball with

    sum_i w_i T_{-c}(y_i) = 0,

i.e. pushing mu forward by T_{-c} moves its Euclidean barycenter to the
origin.  It exists and is unique when no atom carries half of the mass.
"""

import io
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .geometry import Cap, fold, mobius, reflect

DEFAULT_TOL = 1e-10
MAX_ITER = 10_000


class CenterOfMassError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finitely many positive atoms on the sphere."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if len(pts) != len(w):
            raise ValueError("one weight per atom is required")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise ValueError("atom weights must be positive and finite")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def mass(self):
        return float(self.weights.sum())

    @property
    def dim(self):
        return self.points.shape[1] - 1

    def max_atom_fraction(self):
        """Largest mass carried by a single point, as a fraction of the total."""
        _, inv = np.unique(np.round(self.points, 12), axis=0, return_inverse=True)
        per_point = np.bincount(inv.ravel(), weights=self.weights)
        return float(per_point.max() / self.mass)

    def to_text(self):
        """One ``x y z ... weight`` row per atom, full precision."""
        buf = io.StringIO()
        np.savetxt(buf, np.column_stack([self.points, self.weights]), fmt="%.17g")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text):
        a = np.loadtxt(io.StringIO(text), ndmin=2)
        return cls(a[:, :-1], a[:, -1])


def pushforward(mu, fn):
    """Move every atom by the vectorized sphere map `fn`; weights unchanged."""
    return DiscreteMeasure(fn(mu.points), mu.weights)


@dataclass(frozen=True)
class CenterOfMass:
    c: np.ndarray
    residual: float
    iterations: int


def com_residual(mu, c):
    """|sum_i w_i T_{-c}(y_i)| / mass."""
    return float(np.linalg.norm(mu.weights @ mobius(-np.asarray(c), mu.points)) / mu.mass)


def _newton_step(z, w):
    # G(a) = sum w T_{-a}(z) has Jacobian -2 (W I - sum w z z^T) at a = 0
    W = w.sum()
    mean = w @ z
    J = 2.0 * (W * np.eye(z.shape[1]) - np.einsum("i,ij,ik->jk", w, z, z))
    return np.linalg.solve(J, mean)


def center_of_mass(mu, tol=DEFAULT_TOL, start=None, max_iter=MAX_ITER):
    """Solve for the Möbius center of mass of `mu`.

    Damped Newton iteration in the Möbius structure of the ball: with
    z_i = T_{-c}(y_i) the recentred atoms, the step `a` solves the
    linearization of sum w T_{-a}(z) = 0 and the center moves to T_c(s a),
    halving `s` until the residual decreases.  If this stalls, a
    finite-difference root finder on the residual takes over.
    """
    frac = mu.max_atom_fraction()
    if frac >= 0.5:
        raise CenterOfMassError(
            f"an atom carries {frac:.3g} of the mass; the center of mass needs < 1/2")
    n = mu.points.shape[1]
    c = np.zeros(n) if start is None else np.array(start, dtype=float)
    w = mu.weights / mu.mass
    res = com_residual(mu, c)
    it = 0
    stall = 0
    while res > tol and it < max_iter:
        it += 1
        z = mobius(-c, mu.points)
        a = _newton_step(z, w)
        na = np.linalg.norm(a)
        if na > 0.5:
            a *= 0.5 / na
        s = 1.0
        while True:
            cand = mobius(c, s * a)
            if np.linalg.norm(cand) < 1.0 - 1e-9:
                r = com_residual(mu, cand)
                if r < res:
                    break
            s *= 0.5
            if s < 1e-8:
                cand = None
                break
        if cand is None:
            stall += 1
            break
        c, res = cand, r
    if res > tol:
        c, res, extra = _fallback(mu, c, tol)
        it += extra
    if res > tol:
        raise CenterOfMassError(
            f"center of mass did not converge: residual {res:.3e} > tol {tol:.1e} "
            f"after {it} iterations")
    return CenterOfMass(c, res, it)


def _to_ball(v):
    r = np.linalg.norm(v)
    return v if r == 0 else np.tanh(r) * v / r


def _fallback(mu, c0, tol):
    r0 = np.linalg.norm(c0)
    v0 = c0 if r0 == 0 else np.arctanh(min(r0, 1 - 1e-12)) * c0 / r0
    w = mu.weights / mu.mass

    def f(v):
        return w @ mobius(-_to_ball(v), mu.points)

    sol = optimize.root(f, v0, method="hybr", options={"xtol": 1e-15})
    c = _to_ball(sol.x)
    return c, com_residual(mu, c), int(sol.nfev)


def folded_measure(mu, cap):
    """Pushforward of `mu` by the fold map of `cap` (None means t = 1: identity)."""
    if cap is None:
        return mu
    return pushforward(mu, lambda y: fold(cap, y))


def folded_center(mu, cap, tol=DEFAULT_TOL, start=None):
    """Center of mass c_H of the folded measure (F_H)_* mu.

    ``cap=None`` stands for the limit t = 1, where the fold is the identity
    away from the pole and c_H = c(g).
    """
    return center_of_mass(folded_measure(mu, cap), tol, start=start)


def cap_or_limit(p, t):
    """Cap H_{p,t} for t < 1 and None (the whole-sphere limit) for t = 1."""
    if t >= 1.0:
        return None
    return Cap(p, t)


def center_continuity_probe(mu, path, tol=DEFAULT_TOL):
    """Centers c_{p,t} along a path of (p, t) pairs, warm-started in sequence."""
    out = []
    prev = None
    for p, t in path:
        com = folded_center(mu, cap_or_limit(p, t), tol, start=prev)
        prev = com.c
        out.append(com.c)
    return out


def reflected_center(mu, p, tol=DEFAULT_TOL):
    """(center of mass of R_p pushforward, R_p applied to center of mass)."""
    a = center_of_mass(pushforward(mu, lambda y: reflect(p, y)), tol).c
    b = reflect(p, center_of_mass(mu, tol).c)
    return a, b


def simplex_vertices(m):
    """Vertices of a regular (m+1)-simplex inscribed in S^m."""
    n = m + 2
    e = np.eye(n) - 1.0 / n
    # orthonormal basis of the hyperplane sum x = 0
    q, _ = np.linalg.qr(e[:, :-1])
    v = e @ q
    return v / np.linalg.norm(v, axis=1, keepdims=True)
