"""Meshes of S^2 and S^3, conformal metrics, and P1 Galerkin matrices.

A conformal metric g = e^{2 phi} g_0 enters the weak eigenproblem

    int <grad u, grad v>_g dv_g = lambda int u v dv_g

through two weights only: the energy density picks up e^{(m-2) phi} and the
volume density e^{m phi}.  For m = 2 the stiffness matrix is therefore the
round one.
"""

import json
from dataclasses import dataclass, field
from math import factorial

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from . import harmonics
from .measures import DiscreteMeasure


class MeshError(ValueError):
    pass


@dataclass(eq=False)
class Mesh:
    """Closed triangulation of S^m with flat simplices and projected vertices.

    Attributes
    ----------
    vertices : (N, m+1) array of unit vectors
    cells : (K, m+1) int array, positively oriented (det of vertices > 0)
    weights : (N,) lumped vertex quadrature weights (round metric)
    """

    vertices: np.ndarray
    cells: np.ndarray
    level: int = 0
    weights: np.ndarray = field(init=False, repr=False)
    volumes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.cells = np.asarray(self.cells, dtype=np.int64)
        self.volumes = simplex_volumes(self.vertices, self.cells)
        bad = np.flatnonzero(self.volumes <= 1e-300)
        if bad.size:
            raise MeshError(f"degenerate cell {bad[0]} (zero volume)")
        w = np.zeros(len(self.vertices))
        np.add.at(w, self.cells.ravel(), np.repeat(self.volumes / (self.m + 1), self.m + 1))
        self.weights = w
        self._tree = None

    @property
    def m(self):
        return self.vertices.shape[1] - 1

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def h(self):
        """Longest edge length."""
        v = self.vertices[self.cells]
        return max(np.linalg.norm(v[:, i] - v[:, j], axis=1).max()
                   for i in range(self.m + 1) for j in range(i))

    def cell_centroids(self):
        c = self.vertices[self.cells].mean(axis=1)
        return c / np.linalg.norm(c, axis=1, keepdims=True)

    def locate(self, y):
        """Containing cell index and barycentric coordinates for points `y`.

        Containment is in the radial-projection sense: y lies in the cone
        spanned by the cell's vertices.
        """
        y = np.atleast_2d(np.asarray(y, dtype=float))
        if self._tree is None:
            self._tree = cKDTree(self.cell_centroids())
        k = min(16, len(self.cells))
        _, cand = self._tree.query(y, k=k)
        cand = np.atleast_2d(cand)
        idx = np.full(len(y), -1)
        bary = np.zeros((len(y), self.m + 1))
        for row, (pt, cs) in enumerate(zip(y, cand)):
            for c in cs:
                a = np.linalg.solve(self.vertices[self.cells[c]].T, pt)
                if a.min() >= -1e-12:
                    idx[row] = c
                    bary[row] = a / a.sum()
                    break
            if idx[row] < 0:
                # fall back to an exhaustive scan
                A = np.linalg.solve(self.vertices[self.cells].transpose(0, 2, 1), pt)
                c = int(np.argmax(A.min(axis=1)))
                if A[c].min() < -1e-9:
                    raise MeshError(f"point location failed for {pt}")
                idx[row] = c
                bary[row] = A[c] / A[c].sum()
        return idx, bary

    def to_off(self):
        """Mesh as OFF text (ambient coordinates; m = 3 cells written as 4-gons)."""
        n = len(self.vertices)
        lines = ["OFF" if self.m == 2 else "4OFF" if self.m == 3 else "nOFF",
                 f"{n} {len(self.cells)} 0"]
        lines += [" ".join(f"{c:.17g}" for c in v) for v in self.vertices]
        lines += [f"{self.m + 1} " + " ".join(str(i) for i in c) for c in self.cells]
        return "\n".join(lines) + "\n"


def mesh_from_off(text):
    """Inverse of `Mesh.to_off`."""
    rows = [r for r in text.splitlines() if r.strip() and not r.startswith("#")]
    nv, nc = (int(s) for s in rows[1].split()[:2])
    verts = np.array([[float(s) for s in r.split()] for r in rows[2:2 + nv]])
    cells = np.array([[int(s) for s in r.split()[1:]] for r in rows[2 + nv:2 + nv + nc]])
    return Mesh(verts, cells)


def simplex_volumes(vertices, cells):
    """Flat volumes of the m-simplices spanned by `cells`."""
    v = vertices[cells]
    E = v[:, 1:] - v[:, :1]
    G = np.einsum("kai,kbi->kab", E, E)
    m = cells.shape[1] - 1
    return np.sqrt(np.clip(np.linalg.det(G), 0.0, None)) / factorial(m)


def _orient(vertices, cells):
    d = np.linalg.det(vertices[cells])
    cells = cells.copy()
    flip = d < 0
    cells[flip, 0], cells[flip, 1] = cells[flip, 1], cells[flip, 0].copy()
    return cells


def _icosahedron():
    g = (1 + 5 ** 0.5) / 2
    v = []
    for a in (-1, 1):
        for b in (-g, g):
            v += [(0, a, b), (a, b, 0), (b, 0, a)]
    v = np.array(v, dtype=float)
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    # faces are the triples of mutually adjacent vertices
    d = np.linalg.norm(v[:, None] - v[None], axis=2)
    edge = d.min(where=d > 1e-9, initial=np.inf)
    adj = np.abs(d - edge) < 1e-9
    faces = [(i, j, k) for i in range(12) for j in range(i + 1, 12) for k in range(j + 1, 12)
             if adj[i, j] and adj[j, k] and adj[i, k]]
    return v, np.array(faces)


def _cross_polytope(m):
    n = m + 1
    v = np.vstack([np.eye(n), -np.eye(n)])
    cells = []
    for signs in range(2 ** n):
        cells.append([i + n * ((signs >> i) & 1) for i in range(n)])
    return v, np.array(cells)


class _Midpoints:
    def __init__(self, vertices):
        self.verts = [tuple(p) for p in vertices]
        self.index = {}

    def __call__(self, i, j):
        key = (i, j) if i < j else (j, i)
        k = self.index.get(key)
        if k is None:
            a, b = np.array(self.verts[i]), np.array(self.verts[j])
            mid = (a + b) / np.linalg.norm(a + b)
            k = len(self.verts)
            self.verts.append(tuple(mid))
            self.index[key] = k
        return k


def _refine_triangles(vertices, faces):
    mid = _Midpoints(vertices)
    out = []
    for a, b, c in faces:
        ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
        out += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
    return np.array(mid.verts), np.array(out)


def _refine_tets(vertices, tets):
    # red refinement: 4 corner tets plus the inner octahedron cut along the
    # shortest diagonal
    mid = _Midpoints(vertices)
    out = []
    for t in tets:
        x0, x1, x2, x3 = t
        m01, m02, m03 = mid(x0, x1), mid(x0, x2), mid(x0, x3)
        m12, m13, m23 = mid(x1, x2), mid(x1, x3), mid(x2, x3)
        out += [(x0, m01, m02, m03), (m01, x1, m12, m13),
                (m02, m12, x2, m23), (m03, m13, m23, x3)]
        V = mid.verts
        diags = [(m02, m13), (m01, m23), (m03, m12)]
        lens = [sum((u - w) ** 2 for u, w in zip(V[a], V[b])) for a, b in diags]
        a, b = diags[int(np.argmin(lens))]
        # the four octahedron vertices other than a, b form a cycle
        ring = {(m02, m13): (m01, m12, m23, m03),
                (m01, m23): (m02, m03, m13, m12),
                (m03, m12): (m01, m13, m23, m02)}[(a, b)]
        for k in range(4):
            out.append((a, b, ring[k], ring[(k + 1) % 4]))
    return np.array(mid.verts), np.array(out)


def build_mesh(m, level):
    """Subdivided icosahedron (m = 2) or 16-cell boundary (m = 3) on S^m."""
    if level < 0:
        raise MeshError("refinement level must be >= 0")
    if m == 2:
        v, c = _icosahedron()
        for _ in range(level):
            v, c = _refine_triangles(v, c)
    elif m == 3:
        v, c = _cross_polytope(3)
        for _ in range(level):
            v, c = _refine_tets(v, c)
    else:
        raise MeshError(f"meshes are built for m in {{2, 3}}, not m = {m}")
    return Mesh(v, _orient(v, c), level=level)


_MESH_CACHE = {}


def cached_mesh(m, level):
    key = (m, level)
    if key not in _MESH_CACHE:
        _MESH_CACHE[key] = build_mesh(m, level)
    return _MESH_CACHE[key]


# --------------------------------------------------------------------------
# conformal metrics


@dataclass(eq=False)
class ConformalMetric:
    """Log-conformal factor phi of g = e^{2 phi} g_0 on S^m.

    ``kind == "harmonic"``: `data` holds coefficients in the order of
    `harmonics.all_labels(m, L)`.  ``kind == "nodal"``: `data` holds phi at
    the vertices of `mesh`.
    """

    m: int
    kind: str
    data: np.ndarray
    mesh: Mesh = None

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.m < 2:
            raise ValueError("conformal metrics need m >= 2")
        if self.kind not in ("harmonic", "nodal"):
            raise ValueError(f"unknown metric representation {self.kind!r}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("phi must be finite")
        if self.kind == "harmonic":
            L = 0
            total = 1
            while total < len(self.data):
                L += 1
                total += harmonics.dim_harmonics(self.m, L)
            if total != len(self.data):
                raise ValueError(f"{len(self.data)} coefficients do not fill a degree range on S^{self.m}")
            self.degree = L
        elif self.mesh is not None and len(self.data) != self.mesh.n_vertices:
            raise ValueError("nodal values do not match the mesh vertex count")

    @classmethod
    def round(cls, m):
        return cls(m, "harmonic", [0.0])

    @classmethod
    def constant(cls, m, value):
        return cls(m, "harmonic", [value * np.sqrt(harmonics.sphere_volume(m))])

    @classmethod
    def from_terms(cls, m, L, terms):
        """Harmonic metric from a {label: coefficient} mapping."""
        labs = harmonics.all_labels(m, L)
        c = np.zeros(len(labs))
        for lab, val in terms.items():
            c[labs.index(tuple(lab))] = val
        return cls(m, "harmonic", c)

    def shifted(self, s):
        """Metric e^{2s} g, i.e. phi + s."""
        if self.kind == "harmonic":
            d = self.data.copy()
            d[0] += s * np.sqrt(harmonics.sphere_volume(self.m))
            return ConformalMetric(self.m, "harmonic", d)
        return ConformalMetric(self.m, "nodal", self.data + s, self.mesh)

    def phi(self, y):
        """phi at the points `y`."""
        y = np.atleast_2d(np.asarray(y, dtype=float))
        if self.kind == "harmonic":
            return harmonics.basis_matrix(y, self.degree) @ self.data
        if self.mesh is None:
            raise ValueError("a nodal metric needs its mesh for off-vertex evaluation")
        idx, bary = self.mesh.locate(y)
        return np.einsum("ij,ij->i", self.data[self.mesh.cells[idx]], bary)

    def phi_on(self, mesh):
        """phi at the vertices of `mesh`."""
        if self.kind == "nodal" and (self.mesh is mesh or
                                     (self.mesh is None and len(self.data) == mesh.n_vertices)):
            return self.data
        return self.phi(mesh.vertices)

    def to_json(self):
        key = "coeffs" if self.kind == "harmonic" else "values"
        return json.dumps({"m": self.m, "type": self.kind, key: self.data.tolist()})

    @classmethod
    def from_json(cls, text, mesh=None):
        d = json.loads(text) if isinstance(text, str) else text
        if d.get("type") == "harmonic":
            return cls(int(d["m"]), "harmonic", d["coeffs"])
        if d.get("type") == "nodal":
            return cls(int(d["m"]), "nodal", d["values"], mesh)
        raise ValueError(f"unknown metric document type {d.get('type')!r}")


def interpolate(g, y):
    """phi(y) for a single point or an array of points."""
    y = np.asarray(y, dtype=float)
    out = g.phi(y)
    return float(out[0]) if y.ndim == 1 else out


def random_harmonic_metric(rng, m, L, amplitude=0.5):
    """Coefficients uniform in [-amplitude, amplitude] for 1 <= degree <= L."""
    n = len(harmonics.all_labels(m, L))
    c = rng.uniform(-amplitude, amplitude, n)
    c[0] = 0.0
    return ConformalMetric(m, "harmonic", c)


# --------------------------------------------------------------------------
# quadrature measures and Galerkin matrices


def vertex_density(g, mesh):
    """e^{m phi} at the vertices."""
    return np.exp(g.m * g.phi_on(mesh))


def volume_measure(g, mesh):
    """Atoms at the vertices with weights w_i e^{m phi(y_i)}; total ~ Vol(S^m, g)."""
    _check(g, mesh)
    return DiscreteMeasure(mesh.vertices, mesh.weights * vertex_density(g, mesh))


@dataclass(eq=False)
class GalerkinPair:
    stiffness: sp.csr_matrix
    mass: sp.csr_matrix

    @property
    def volume(self):
        return float(self.mass.diagonal().sum())


def _check(g, mesh):
    if g.m != mesh.m:
        raise ValueError(f"metric on S^{g.m} used with a mesh of S^{mesh.m}")


def cell_gradients(mesh):
    """Gradients of the barycentric hat functions on every flat cell.

    Returns an array of shape (K, m+1, m+1): cell, local vertex, ambient
    component.
    """
    v = mesh.vertices[mesh.cells]
    E = v[:, 1:] - v[:, :1]                       # K x m x n
    G = np.einsum("kai,kbi->kab", E, E)
    Ginv = np.linalg.inv(G)
    D = np.einsum("kab,kbi->kai", Ginv, E)        # grads of lambda_1..lambda_m
    return np.concatenate([-D.sum(axis=1, keepdims=True), D], axis=1)


def stiffness_matrix(mesh, cell_weight=None):
    grads = cell_gradients(mesh)
    local = np.einsum("kai,kbi->kab", grads, grads) * mesh.volumes[:, None, None]
    if cell_weight is not None:
        local *= cell_weight[:, None, None]
    m1 = mesh.m + 1
    rows = np.repeat(mesh.cells, m1, axis=1).ravel()
    cols = np.tile(mesh.cells, (1, m1)).ravel()
    n = mesh.n_vertices
    K = sp.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))
    return ((K + K.T) * 0.5).tocsr()


def energy_cell_weight(g, mesh):
    """Per-cell weight of the Dirichlet energy: vertex mean of e^{(m-2) phi}."""
    if g.m == 2:
        return None
    e = np.exp((g.m - 2) * g.phi_on(mesh))
    return e[mesh.cells].mean(axis=1)


def assemble(g, mesh):
    """P1 stiffness and vertex-quadrature (lumped) mass for the metric `g`."""
    _check(g, mesh)
    K = stiffness_matrix(mesh, energy_cell_weight(g, mesh))
    M = sp.diags(mesh.weights * vertex_density(g, mesh)).tocsr()
    return GalerkinPair(K, M)
