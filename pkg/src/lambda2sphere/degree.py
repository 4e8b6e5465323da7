"""Brouwer degree of maps S^m -> S^m from a simplicial approximation.

The map is sampled at the vertices of a mesh of S^m.  When the images of
every cell lie well inside an open hemisphere (star condition), the map is
homotopic to its simplicial approximation, and the degree is the signed
number of cells whose image cone contains a regular value q.
"""

import numpy as np

from .discretize import build_mesh


class DegreeError(RuntimeError):
    pass


#: Images of the vertices of one cell must be pairwise closer than this angle.
STAR_ANGLE = np.pi / 3


def _star_ok(images, cells):
    im = images[cells]
    k = cells.shape[1]
    for a in range(k):
        for b in range(a):
            cosang = np.einsum("ki,ki->k", im[:, a], im[:, b])
            if np.any(cosang < np.cos(STAR_ANGLE)):
                return False
    return True


def signed_preimage_count(images, mesh, q):
    """Signed count of cells whose image cone contains the unit vector q.

    Orientation sign = sign det(image vertices) * sign det(source vertices).
    Cells with degenerate images contribute nothing.
    """
    A = images[mesh.cells]                       # K x (m+1) x n
    dets = np.linalg.det(A)
    src = np.sign(np.linalg.det(mesh.vertices[mesh.cells]))
    ok = np.abs(dets) > 1e-14
    total = 0
    hits = np.zeros(len(A), dtype=bool)
    if np.any(ok):
        alpha = np.linalg.solve(A[ok].transpose(0, 2, 1), np.broadcast_to(q, (ok.sum(), len(q)))[..., None])[..., 0]
        inside = np.all(alpha > 0, axis=1)
        hits[np.flatnonzero(ok)[inside]] = True
        total = int(np.sum(np.sign(dets[hits]) * src[hits]))
    return total, hits


def _regular_value(images, mesh, rng, tries=50):
    # a q is accepted when it is not too close to any image-cell face plane
    A = images[mesh.cells]
    m1 = mesh.m + 1
    for _ in range(tries):
        q = rng.standard_normal(m1)
        q /= np.linalg.norm(q)
        dets = np.linalg.det(A)
        ok = np.abs(dets) > 1e-14
        if not np.any(ok):
            return q
        alpha = np.linalg.solve(A[ok].transpose(0, 2, 1),
                                np.broadcast_to(q, (ok.sum(), m1))[..., None])[..., 0]
        scale = np.abs(alpha).sum(axis=1)
        if np.min(np.abs(alpha).min(axis=1) / scale) > 1e-9:
            return q
    raise DegreeError("no regular value found")


def degree(fn, m=2, level=2, max_level=5, seed=0, return_level=False):
    """Degree of the vectorized sphere map `fn` (points (N, m+1) -> (N, m+1)).

    Starts on a mesh of the given refinement level and refines until the
    star condition holds, up to `max_level`.
    """
    rng = np.random.default_rng(seed)
    for lv in range(level, max_level + 1):
        mesh = build_mesh(m, lv)
        images = np.asarray(fn(mesh.vertices), dtype=float)
        images = images / np.linalg.norm(images, axis=1, keepdims=True)
        if not _star_ok(images, mesh.cells):
            continue
        q = _regular_value(images, mesh, rng)
        d, _ = signed_preimage_count(images, mesh, q)
        return (d, lv) if return_level else d
    raise DegreeError(f"star condition still fails at refinement level {max_level}")


def degree_from_samples(images, mesh, seed=0):
    """Degree from precomputed vertex images (no refinement possible)."""
    images = np.asarray(images, dtype=float)
    images = images / np.linalg.norm(images, axis=1, keepdims=True)
    if not _star_ok(images, mesh.cells):
        raise DegreeError("star condition fails; sample on a finer mesh")
    q = _regular_value(images, mesh, np.random.default_rng(seed))
    return signed_preimage_count(images, mesh, q)[0]


def degree_by_area(images, mesh):
    """Total signed solid angle of the image triangles over 4 pi (m = 2 only).

    Independent of `signed_preimage_count`; agrees with it whenever the star
    condition holds.
    """
    if mesh.m != 2:
        raise ValueError("solid-angle degree is implemented for m = 2")
    a, b, c = (images[mesh.cells[:, k]] for k in range(3))
    num = np.einsum("ki,ki->k", a, np.cross(b, c))
    den = 1 + np.einsum("ki,ki->k", a, b) + np.einsum("ki,ki->k", b, c) + np.einsum("ki,ki->k", c, a)
    omega = 2 * np.arctan2(num, den)
    src = np.sign(np.linalg.det(mesh.vertices[mesh.cells]))
    return float(np.sum(omega * src) / (4 * np.pi))
