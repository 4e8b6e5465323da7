"""Closed-form geometry of the unit sphere S^m inside the ball B^{m+1}.

All maps are vectorized: a point argument may be a single vector of length
m+1 or an array of shape (..., m+1).  Möbius parameters and cap poles are
single vectors.
"""

from dataclasses import dataclass

import numpy as np

#: Möbius parameters closer than this to the unit sphere are rejected.
BALL_MARGIN = 1e-9
#: Closed-inequality slack for cap membership.
BOUNDARY_TOL = 1e-12
#: Allowed deviation from unit norm when validating sphere points.
UNIT_TOL = 1e-14


class GeometryError(ValueError):
    """Raised when a point lies outside the domain of a map."""


def _check_dim(n):
    if n - 1 < 2:
        raise GeometryError(f"sphere dimension m = {n - 1} is below 2")


def sphere_point(coords, normalize=True):
    """Return `coords` as a validated point (or array of points) on S^m.

    With ``normalize=True`` the input is scaled to unit norm; otherwise any
    deviation above ``UNIT_TOL`` (after one rounding step) raises.
    """
    y = np.array(coords, dtype=float)
    _check_dim(y.shape[-1])
    nrm = np.linalg.norm(y, axis=-1, keepdims=True)
    if np.any(nrm == 0) or not np.all(np.isfinite(y)):
        raise GeometryError("cannot place a zero or non-finite vector on the sphere")
    if normalize:
        return y / nrm
    if np.any(np.abs(nrm - 1.0) > UNIT_TOL + 4 * np.finfo(float).eps):
        raise GeometryError("point is not on the unit sphere")
    return y


def ball_point(coords):
    """Return `coords` as a validated Möbius parameter, |x| <= 1 - BALL_MARGIN."""
    x = np.array(coords, dtype=float)
    if x.ndim != 1:
        raise GeometryError("a ball point is a single vector")
    _check_dim(x.shape[0])
    r = np.linalg.norm(x)
    if not np.isfinite(r) or r > 1.0 - BALL_MARGIN:
        raise GeometryError(f"|x| = {r!r} is outside the open unit ball")
    return x


def mobius(x, y):
    """Möbius transformation T_x of the closed ball, applied to `y`.

    T_x(y) = ((1 + 2x.y + |y|^2) x + (1 - |x|^2) y) / (1 + 2x.y + |x|^2 |y|^2)

    T_0 is the identity, T_x(0) = x, T_{-x} inverts T_x, and T_x maps the
    sphere to itself fixing +-x/|x|.
    """
    x = ball_point(x)
    y = np.asarray(y, dtype=float)
    xy = y @ x
    yy = np.einsum("...i,...i->...", y, y)
    xx = x @ x
    num = (1.0 + 2.0 * xy + yy)[..., None] * x + (1.0 - xx) * y
    den = 1.0 + 2.0 * xy + xx * yy
    return num / den[..., None]


def mobius_inverse_check(x, y):
    """Return T_{-x}(T_x(y)); equals `y` up to rounding."""
    x = ball_point(x)
    return mobius(-x, mobius(x, y))


def mobius_conformal_factor(x, y):
    """Pointwise stretch |dT_x| of T_x restricted to the sphere at `y`.

    Equal to (1 - |x|^2) / (1 + 2x.y + |x|^2) for unit `y`.  The density of
    the pushforward of the round measure by T_x, at a point z, is the m-th
    power of ``mobius_conformal_factor(-x, z)``.
    """
    x = ball_point(x)
    y = np.asarray(y, dtype=float)
    return (1.0 - x @ x) / (1.0 + 2.0 * (y @ x) + x @ x)


def reflect(p, y):
    """Reflection R_p(y) = y - 2 (y.p) p in the hyperplane orthogonal to `p`."""
    p = np.asarray(p, dtype=float)
    y = np.asarray(y, dtype=float)
    return y - 2.0 * (y @ p)[..., None] * p


def cap_threshold(t):
    """Height 2t / (1 + t^2) bounding the cap H_{p,t} = {y.p <= height}."""
    return 2.0 * t / (1.0 + t * t)


@dataclass(frozen=True, eq=False)
class Cap:
    """Spherical cap H_{p,t} = T_{pt}(H_p), the image of the hemisphere y.p <= 0.

    `p` is the pole (normalized on construction) and `t` lies in [0, 1).  As
    t -> 1 the cap grows to cover everything except `p`.
    """

    p: np.ndarray
    t: float

    def __post_init__(self):
        object.__setattr__(self, "p", sphere_point(self.p))
        t = float(self.t)
        if not 0.0 <= t < 1.0:
            raise GeometryError(f"cap parameter t = {t!r} is outside [0, 1)")
        if self.p.ndim != 1:
            raise GeometryError("a cap pole is a single vector")
        object.__setattr__(self, "t", t)

    @property
    def dim(self):
        return self.p.shape[0] - 1

    @property
    def height(self):
        return cap_threshold(self.t)

    @property
    def center(self):
        """Möbius parameter pt with H_{p,t} = T_{pt}(H_p)."""
        return self.t * self.p

    def contains(self, y, tol=BOUNDARY_TOL):
        return cap_contains(self, y, tol)

    def reflect(self, y):
        return cap_reflect(self, y)

    def fold(self, y):
        return fold(self, y)


def cap_contains(cap, y, tol=BOUNDARY_TOL):
    """Closed membership test y.p <= 2t/(1+t^2), with slack `tol`.

    Evaluated as |y - p|^2 / 2 >= (1-t)^2 / (1+t^2), which keeps the pole
    outside the cap for every t < 1.  The slack never exceeds half of that
    gap.
    """
    y = np.asarray(y, dtype=float)
    t = cap.t
    u = (1.0 - t) ** 2 / (1.0 + t * t)
    diff = y - cap.p
    d = 0.5 * np.einsum("...i,...i->...", diff, diff)
    return d >= u - min(tol, 0.5 * u)


def cap_reflect(cap, y):
    """Reflection R_H = T_{pt} o R_p o T_{-pt} across the boundary of the cap.

    An involution of the sphere that swaps the cap with the closure of its
    complement and fixes the boundary circle pointwise.  Evaluated as the
    inversion in the sphere orthogonal to S^m through the boundary circle,

        R_H(y) = ((1 - h^2) y + 2 (h - y.p) p) / (1 - 2 h y.p + h^2),

    with h the cap height; this agrees with the conjugation (see
    `cap_reflect_conjugated`) and loses far less precision as t -> 1.
    """
    y = np.asarray(y, dtype=float)
    t = cap.t
    h = cap.height
    # u = 1 - h and d = 1 - y.p written without cancellation near the pole
    u = (1.0 - t) ** 2 / (1.0 + t * t)
    diff = y - cap.p
    d = 0.5 * np.einsum("...i,...i->...", diff, diff)
    num = u * (1.0 + h) * y + (2.0 * (d - u))[..., None] * cap.p
    return num / (u * u + 2.0 * h * d)[..., None]


def cap_reflect_conjugated(cap, y):
    """R_H evaluated literally as T_{pt}(R_p(T_{-pt}(y)))."""
    a = cap.center
    return mobius(a, reflect(cap.p, mobius(-a, y)))


def fold(cap, y, tol=BOUNDARY_TOL):
    """Fold map: identity on the cap, R_H on its complement.

    Boundary points (within `tol`) take the identity branch; the two branches
    agree there.
    """
    y = np.asarray(y, dtype=float)
    inside = cap_contains(cap, y, tol)
    if np.ndim(inside) == 0:
        return y.copy() if inside else cap_reflect(cap, y)
    out = y.copy()
    outside = ~inside
    if np.any(outside):
        out[outside] = cap_reflect(cap, y[outside])
    return out


def conjugation_identity_check(p, x, y):
    """Residual |T_{R_p x}(R_p y) - R_p(T_x(y))| (max over points)."""
    p = np.asarray(p, dtype=float)
    x = ball_point(x)
    lhs = mobius(reflect(p, x), reflect(p, y))
    rhs = reflect(p, mobius(x, y))
    return float(np.max(np.linalg.norm(lhs - rhs, axis=-1)))


def random_sphere_points(rng, n, m):
    """`n` uniformly distributed points on S^m."""
    g = rng.standard_normal((n, m + 1))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def random_ball_points(rng, n, m, rmax=0.9):
    """`n` points uniform in direction with radius uniform in [0, rmax]."""
    return random_sphere_points(rng, n, m) * rng.uniform(0.0, rmax, size=(n, 1))


def geometry_residuals(m, n_samples=10_000, seed=0, rmax=0.9):
    """Maximum residuals of the exact geometric identities on random samples.

    Returns a dict keyed by identity name.  Every entry is expected to be at
    rounding level (well below 1e-12).
    """
    rng = np.random.default_rng(seed)
    ys = random_sphere_points(rng, n_samples, m)
    xs = random_ball_points(rng, n_samples, m, rmax)
    ps = random_sphere_points(rng, n_samples, m)
    ts = rng.uniform(0.0, rmax, n_samples)

    res = dict.fromkeys(
        ["mobius_inverse", "unit_norm", "conjugation", "cap_involution", "cap_conjugation",
         "cap_boundary_fixed", "fold_in_cap", "fold_idempotent", "fold_reflection"],
        0.0,
    )
    for x, y, p, t in zip(xs, ys, ps, ts):
        ty = mobius(x, y)
        res["unit_norm"] = max(res["unit_norm"], abs(np.linalg.norm(ty) - 1.0))
        res["mobius_inverse"] = max(res["mobius_inverse"],
                                    np.linalg.norm(mobius(-x, ty) - y))
    # conjugation and cap identities are vectorized per parameter, so sample
    # them in batches that share a parameter
    batch = 100
    for k in range(0, n_samples, batch):
        p, x, t = ps[k], xs[k], ts[k]
        yb = ys[k:k + batch]
        res["conjugation"] = max(res["conjugation"], conjugation_identity_check(p, x, yb))
        cap = Cap(p, t)
        ry = cap_reflect(cap, yb)
        res["cap_involution"] = max(res["cap_involution"],
                                    np.max(np.linalg.norm(cap_reflect(cap, ry) - yb, axis=1)))
        res["cap_conjugation"] = max(res["cap_conjugation"],
                                     np.max(np.linalg.norm(cap_reflect_conjugated(cap, yb) - ry, axis=1)))
        fy = fold(cap, yb)
        excess = np.max(fy @ cap.p - cap.height)
        res["fold_in_cap"] = max(res["fold_in_cap"], max(excess, 0.0))
        res["fold_idempotent"] = max(res["fold_idempotent"],
                                     np.max(np.linalg.norm(fold(cap, fy) - fy, axis=1)))
        bd = boundary_points(cap, rng, batch)
        res["cap_boundary_fixed"] = max(res["cap_boundary_fixed"],
                                        np.max(np.linalg.norm(cap_reflect(cap, bd) - bd, axis=1)))
        hp, hm = Cap(p, 0.0), Cap(-p, 0.0)
        res["fold_reflection"] = max(
            res["fold_reflection"],
            np.max(np.linalg.norm(fold(hm, yb) - reflect(p, fold(hp, yb)), axis=1)),
        )
    return {k: float(v) for k, v in res.items()}


def boundary_points(cap, rng, n):
    """`n` random points on the boundary circle y.p = 2t/(1+t^2)."""
    m = cap.dim
    g = rng.standard_normal((n, m + 1))
    g -= np.outer(g @ cap.p, cap.p)
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    h = cap.height
    return h * cap.p + np.sqrt(1.0 - h * h) * g
