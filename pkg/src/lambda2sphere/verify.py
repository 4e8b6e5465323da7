"""Trial functions for lambda_2, the vector field V(p, t) and the bound chain.

For a cap H and the center c_H of the folded volume measure, the m+1
functions u_j = (T_{-c_H} o F_H)_j are orthogonal to constants.  They are
also orthogonal to a first eigenfunction f exactly when

    V(p, t) = int T_{-c_H}(F_H(y)) f(y) dv_g

vanishes.  At such a cap the Rayleigh quotients of the u_j bound lambda_2
from above, and a chain of inequalities ends at m (2 sigma_m)^{2/m}.

Everything is discrete: the measure is the vertex-quadrature volume
measure, which is also the (diagonal) mass matrix of the eigenproblem, so
orthogonality here is orthogonality in the eigensolver's inner product.
"""

import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize
from scipy.stats import qmc

from . import energy
from .degree import degree
from .discretize import assemble, volume_measure
from .eigensolve import solve_bottom
from .geometry import Cap, fold, mobius
from .harmonics import sphere_volume
from .measures import CenterOfMassError, cap_or_limit, center_of_mass, folded_center

log = logging.getLogger(__name__)


def sharp_bound(m):
    """m (2 sigma_m)^{2/m}, the supremum of lambda_2 Vol^{2/m}."""
    return m * (2 * sphere_volume(m)) ** (2 / m)


def round_value(m):
    """m sigma_m^{2/m}, lambda_1 Vol^{2/m} of the round sphere."""
    return m * sphere_volume(m) ** (2 / m)


# --------------------------------------------------------------------------
# trial functions


@dataclass(eq=False)
class TrialFamily:
    """Nodal trial maps u(y_i) = T_{-c}(F_H(y_i)); `cap` None means t = 1."""

    cap: object
    center: np.ndarray
    u: np.ndarray
    weights: np.ndarray

    @property
    def volume(self):
        return float(self.weights.sum())

    def constant_residual(self):
        """max_j |<u_j, 1>_g| / Vol."""
        return float(np.abs(self.weights @ self.u).max() / self.volume)

    def unit_norm_residual(self):
        return float(np.abs(np.einsum("ij,ij->i", self.u, self.u) - 1.0).max())


def trial_family(g, mesh, cap, tol=1e-10):
    """Trial maps for the cap (or for t = 1 when `cap` is None)."""
    mu = volume_measure(g, mesh)
    com = folded_center(mu, cap, tol)
    y = mesh.vertices if cap is None else fold(cap, mesh.vertices)
    return TrialFamily(cap, com.c, mobius(-com.c, y), mu.weights)


def first_excited(res):
    """Index-1 eigenvector of a SpectrumResult (mass-normalized, sign-fixed)."""
    return res.eigenvectors[:, 1].copy()


# --------------------------------------------------------------------------
# vector field


@dataclass
class VectorFieldSample:
    p: np.ndarray
    t: float
    V: np.ndarray
    center: np.ndarray

    @property
    def norm(self):
        return float(np.linalg.norm(self.V))


class VectorField:
    """V(p, t) for a fixed discrete volume measure and first eigenfunction f."""

    def __init__(self, mu, f, tol=1e-11):
        self.mu = mu
        self.points = mu.points
        self.wf = mu.weights * np.asarray(f, dtype=float)
        self.volume = mu.mass
        self.tol = tol
        self._limit = None

    @classmethod
    def from_metric(cls, g, mesh, f, tol=1e-11):
        return cls(volume_measure(g, mesh), f, tol)

    def limit(self):
        """V(g) = V(p, 1), the same for every p."""
        if self._limit is None:
            c = center_of_mass(self.mu, self.tol).c
            self._limit = (self.wf @ mobius(-c, self.points), c)
        return self._limit

    def __call__(self, p, t, start=None):
        p = np.asarray(p, dtype=float)
        p = p / np.linalg.norm(p)
        if t >= 1.0:
            V, c = self.limit()
            return VectorFieldSample(p, 1.0, V.copy(), c)
        cap = Cap(p, t)
        com = folded_center(self.mu, cap, self.tol, start=start)
        y = fold(cap, self.points)
        return VectorFieldSample(p, float(t), self.wf @ mobius(-com.c, y), com.c)

    def along_t(self, p, ts):
        """Samples at fixed p for increasing t, warm-starting the centers."""
        out = []
        prev = None
        for t in ts:
            s = self(p, t, start=prev)
            prev = s.center if t < 1.0 else None
            out.append(s)
        return out


def vector_field(g, mesh, f, p, t):
    return VectorField.from_metric(g, mesh, f)(p, t)


def sphere_grid(m, n, seed=0):
    """`n` quasi-uniform points on S^m (spherical Fibonacci lattice for m = 2)."""
    if m == 2:
        k = np.arange(n) + 0.5
        z = 1 - 2 * k / n
        phi = np.pi * (1 + 5 ** 0.5) * k
        r = np.sqrt(1 - z * z)
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    from scipy.special import ndtri
    u = qmc.Halton(d=m + 1, seed=seed).random(n)
    g = ndtri(np.clip(u, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


@dataclass
class VectorFieldGrid:
    points: np.ndarray
    ts: np.ndarray
    V: np.ndarray         # (n_p, n_t, m+1)
    volume: float

    @property
    def norms(self):
        return np.linalg.norm(self.V, axis=-1)

    def to_csv(self):
        m1 = self.points.shape[1]
        buf = io.StringIO()
        cols = [f"p{i + 1}" for i in range(m1)] + ["t"] + [f"V{i + 1}" for i in range(m1)] + ["absV"]
        buf.write(",".join(cols) + "\n")
        for i, p in enumerate(self.points):
            for k, t in enumerate(self.ts):
                row = list(p) + [t] + list(self.V[i, k]) + [np.linalg.norm(self.V[i, k])]
                buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
        return buf.getvalue()

    def candidates(self, count=8):
        """Grid points with the smallest |V|, best first, as (p, t, |V|/Vol)."""
        nrm = self.norms / self.volume
        order = np.argsort(nrm, axis=None)[:count]
        out = []
        for flat in order:
            i, k = np.unravel_index(flat, nrm.shape)
            out.append((self.points[i], float(self.ts[k]), float(nrm[i, k])))
        return out


def sample_grid(field, m, n_points=512, n_t=33, workers=1, seed=0):
    pts = sphere_grid(m, n_points, seed)
    ts = np.linspace(0.0, 1.0, n_t)

    def row(p):
        return np.array([s.V for s in field.along_t(p, ts)])

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            rows = list(ex.map(row, pts))
    else:
        rows = [row(p) for p in pts]
    return VectorFieldGrid(pts, ts, np.array(rows), field.volume)


@dataclass
class ZeroResult:
    """Outcome of the zero search; ``t == 1`` is the whole-sphere case."""

    p: np.ndarray
    t: float
    residual: float        # |V| / Vol at (p, t)
    converged: bool
    center: np.ndarray
    grid: VectorFieldGrid = field(default=None, repr=False)
    candidates: list = field(default_factory=list, repr=False)

    @property
    def is_limit(self):
        return self.t >= 1.0

    def cap(self):
        return cap_or_limit(self.p, self.t)


def _tangent_basis(p):
    n = len(p)
    q, _ = np.linalg.qr(np.column_stack([p, np.eye(n)]))
    return q[:, 1:n]


def _refine(field, p0, t0, tol):
    """Derivative-free local solve of V(p, t) = 0 near (p0, t0).

    Unknowns are tangent coordinates z (p = normalize(p0 + B z)) and s with
    t = |s| kept below 1, so a zero on the t = 0 face is an interior point
    of the search.
    """
    B = _tangent_basis(p0)
    vol = field.volume
    state = {"c": None}

    def unpack(x):
        p = p0 + B @ x[:-1]
        p = p / np.linalg.norm(p)
        t = min(abs(x[-1]), 1.0 - 1e-9)
        return p, t

    def residual(x):
        p, t = unpack(x)
        try:
            s = field(p, t, start=state["c"])
        except CenterOfMassError:
            return np.full(len(p0), 1e3)
        state["c"] = s.center
        return s.V / vol

    best = None
    x0 = np.zeros(len(p0))
    x0[-1] = t0
    for method, opts in (("hybr", {"xtol": 1e-13, "maxfev": 400}),
                         ("lm", {"xtol": 1e-14, "ftol": 1e-16, "maxiter": 600})):
        sol = optimize.root(residual, x0, method=method, options=opts)
        p, t = unpack(sol.x)
        r = float(np.linalg.norm(residual(sol.x)))
        if best is None or r < best[2]:
            best = (p, t, r)
        if r <= tol:
            break
        x0 = sol.x
    if best[2] > tol:
        # pattern search on |V| as a last resort
        sol = optimize.minimize(lambda x: np.linalg.norm(residual(x)), x0,
                                method="Nelder-Mead",
                                options={"xatol": 1e-13, "fatol": tol * 1e-3, "maxfev": 4000})
        p, t = unpack(sol.x)
        r = float(np.linalg.norm(residual(sol.x)))
        if r < best[2]:
            best = (p, t, r)
    return best


def find_zero(field, m, n_points=512, n_t=33, tol=1e-6, n_starts=6, workers=1,
              grid=None):
    """Search S^m x [0, 1] for a zero of V with |V| <= tol * Vol.

    A coarse grid provides starting points, which are refined by a
    derivative-free root finder.  If the best grid value sits at t = 1 and
    already meets `tol`, the whole-sphere case is returned.  When nothing
    reaches `tol` the best candidate is returned with ``converged=False``.
    """
    if grid is None:
        grid = sample_grid(field, m, n_points, n_t, workers)
    cands = grid.candidates(max(n_starts * 4, 16))
    vol = field.volume
    best = None
    p_best, t_best, r_best = cands[0]
    if t_best >= 1.0 and r_best <= tol:
        V, c = field.limit()
        return ZeroResult(p_best, 1.0, r_best, True, c, grid, cands)
    tried = 0
    for p0, t0, r0 in cands:
        if t0 >= 1.0:
            continue
        if best is not None and any(np.linalg.norm(p0 - q) < 0.05 and abs(t0 - s) < 0.05
                                    for q, s in best[3]):
            continue
        p, t, r = _refine(field, p0, t0, tol)
        seen = [] if best is None else best[3]
        if best is None or r < best[2]:
            best = (p, t, r, seen)
        best[3].append((p0, t0))
        tried += 1
        if r <= tol or tried >= n_starts:
            break
    p, t, r, _ = best
    s = field(p, t)
    return ZeroResult(p, t, float(np.linalg.norm(s.V) / vol), r <= tol, s.center, grid, cands)


def reflection_symmetry_degree(field, m, level=2, max_level=4, min_norm=1e-8,
                               return_level=False):
    """Degree of p -> V(p, 0)/|V(p, 0)|, refining the sample mesh as needed.

    Raises ValueError if V(p, 0) comes within `min_norm` * Vol of zero on
    a sample (then the normalized map is not defined there and a zero of
    V has been found instead), and DegreeError if the star condition still
    fails at `max_level`.
    """
    def normalized_field(points):
        Vs = np.array([field(p, 0.0).V for p in points])
        nrm = np.linalg.norm(Vs, axis=1) / field.volume
        if nrm.min() <= min_norm:
            raise ValueError(f"V(p, 0) nearly vanishes (|V|/Vol = {nrm.min():.2e}) on the sample")
        return Vs

    return degree(normalized_field, m, level, max_level, return_level=return_level)


# --------------------------------------------------------------------------
# the bound chain


@dataclass
class ChainReport:
    """Successive quantities of the Rayleigh / Hölder / fold estimate.

    All values are normalized like lambda_2 Vol^{2/m}.  ``links`` maps each
    inequality name to (lhs, rhs, holds) with the slack applied to rhs.
    """

    m: int
    t: float
    lambda2_vol: float
    rayleigh_quotients: list
    averaged_rayleigh: float
    holder: float
    folded_cap: float
    image_cap: float
    final_bound: float
    round_bound: float
    orthogonality: dict
    slack: float
    links: dict

    @property
    def holds(self):
        return all(v[2] for v in self.links.values())

    @property
    def margin(self):
        """Relative margin of lambda_2 Vol^{2/m} below the sharp bound."""
        return 1.0 - self.lambda2_vol / self.final_bound

    def to_json(self):
        d = asdict(self)
        d["holds"] = self.holds
        d["margin"] = self.margin
        return json.dumps(d, indent=2, default=float)


def default_slack(m):
    return 0.02 if m == 2 else 0.03


def bound_chain(g, mesh, res, zero, slack=None):
    """Evaluate every link of the estimate at the zero of the vector field.

    `res` is the SpectrumResult of (g, mesh) and `zero` a ZeroResult.
    """
    m = mesh.m
    slack = default_slack(m) if slack is None else slack
    pair = assemble(g, mesh)
    fam = trial_family(g, mesh, zero.cap())
    vol = fam.volume
    lam2 = float(res.eigenvalues[2])
    U = fam.u
    w = fam.weights
    energies = np.einsum("ij,ij->j", U, pair.stiffness @ U)
    norms = np.einsum("i,ij->j", w, U * U)
    quotients = energies / norms
    f = first_excited(res)
    s = 2.0 / m

    q0 = lam2 * vol ** s
    q1 = energies.sum() / vol * vol ** s
    E_m = energy.dirichlet_m_energy(U, mesh)
    q2 = E_m ** s
    if zero.is_limit:
        cap_e = energy.dirichlet_m_energy(mobius(-fam.center, mesh.vertices), mesh)
        q3 = cap_e ** s
        img = energy.identity_energy(mesh)
        q3b = img ** s
    else:
        cap = zero.cap()
        _, cap_e = energy.folded_map_energy(mesh, cap, fam.center)
        q3 = (2 * cap_e) ** s
        img = energy.image_cell_energy(mesh, mobius(-fam.center, mesh.vertices), cap, "any")
        q3b = (2 * img) ** s
    q4 = sharp_bound(m)
    one = 1.0 + slack
    links = {
        "rayleigh_each": (lam2, float(quotients.min()), bool(lam2 <= quotients.min() * one)),
        "averaged": (q0, q1, bool(q0 <= q1 * one)),
        "holder": (q1, q2, bool(q1 <= q2 * one)),
        "fold_split": (q2, q3, bool(q2 <= q3 * one)),
        "change_of_variables": (q3, q3b, bool(q3 <= q3b * one)),
        "final": (q3b, q4, bool(q3b <= q4 * one)),
        "theorem": (q0, q4, bool(q0 <= q4 * one)),
    }
    orth = {
        "constant": fam.constant_residual(),
        "first_excited": float(np.linalg.norm(w * f @ U) / vol),
    }
    return ChainReport(m, float(zero.t), q0, quotients.tolist(), q1, q2, q3, q3b, q4,
                       round_value(m), orth, slack,
                       {k: (float(a), float(b), c) for k, (a, b, c) in links.items()})
