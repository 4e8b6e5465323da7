"""Dirichlet m-energies of piecewise-linear maps S^m -> R^{m+1}.

For a nodal map F the energy density on a flat cell is
(sum_j |grad F_j|^2)^{m/2}, constant per cell, so

    E_m(F; region) = sum_{cells in region} |cell| (sum_j |grad F_j|^2)^{m/2}.

The m-energy is invariant under conformal changes of the metric and under
Möbius transformations and reflections of the domain.
"""

import numpy as np

from .discretize import cell_gradients, simplex_volumes, stiffness_matrix
from .geometry import Cap, cap_contains, mobius, reflect


def cell_energy_density(F, mesh):
    """sum_j |grad F_j|^2 on every cell, for nodal values F of shape (N, k)."""
    grads = cell_gradients(mesh)                  # K x (m+1) x n
    vals = np.asarray(F, dtype=float)[mesh.cells]  # K x (m+1) x k
    J = np.einsum("kai,kaj->kij", grads, vals)   # gradient of each component
    return np.einsum("kij,kij->k", J, J)


def cells_in(region, mesh, rule="centroid"):
    """Boolean mask of cells assigned to `region`.

    `region` is None (everything), a Cap, a callable predicate on points, or
    a ready-made boolean mask.  With ``rule="centroid"`` a cell belongs to
    the region when its (projected) centroid does; ``rule="any"`` assigns
    every cell touching the region, which is how cells straddling a cap
    boundary are given to the cap branch of a fold.
    """
    if region is None:
        return np.ones(len(mesh.cells), dtype=bool)
    if isinstance(region, np.ndarray) and region.dtype == bool:
        return region
    if isinstance(region, Cap):
        cap = region

        def region(y):
            return cap_contains(cap, y)
    if rule == "centroid":
        return np.asarray(region(mesh.cell_centroids()), dtype=bool)
    if rule == "any":
        inside = np.asarray(region(mesh.vertices), dtype=bool)
        return inside[mesh.cells].any(axis=1)
    raise ValueError(f"unknown cell assignment rule {rule!r}")


def dirichlet_m_energy(F, mesh, region=None, rule="centroid"):
    """int_region (sum_j |grad F_j|^2)^{m/2} dv_{g0} for the P1 interpolant of F."""
    dens = cell_energy_density(F, mesh)
    mask = cells_in(region, mesh, rule)
    return float(np.sum(mesh.volumes[mask] * dens[mask] ** (mesh.m / 2)))


def identity_energy(mesh, region=None, rule="centroid"):
    """m-energy of the identity map; m^{m/2} times the flat volume covered."""
    return dirichlet_m_energy(mesh.vertices, mesh, region, rule)


def folded_map_energy(mesh, cap, c):
    """Whole-sphere and cap energies of the folded, recentred map T_{-c} o F_H.

    Cells touching the cap use the cap branch T_{-c}; the remaining cells
    use T_{-c} o R_H.  Returns ``(whole, cap_energy)``; the fold identity
    says whole = 2 * cap_energy up to the boundary layer.
    """
    m = mesh.m
    in_cap = cells_in(cap, mesh, rule="any")
    inner = mobius(-c, mesh.vertices)
    outer = mobius(-c, cap.reflect(mesh.vertices))
    d_in = cell_energy_density(inner, mesh)
    d_out = cell_energy_density(outer, mesh)
    cap_e = float(np.sum(mesh.volumes[in_cap] * d_in[in_cap] ** (m / 2)))
    out_e = float(np.sum(mesh.volumes[~in_cap] * d_out[~in_cap] ** (m / 2)))
    return cap_e + out_e, cap_e


def image_cell_energy(mesh, F, region=None, rule="centroid"):
    """m^{m/2} times the flat volume of the image simplices F(cell).

    Discrete right-hand side of the change of variables: for every affine
    cell map the m-energy is at least this, with equality when the map is
    conformal on the cell.
    """
    mask = cells_in(region, mesh, rule)
    m = mesh.m
    vols = simplex_volumes(np.asarray(F, dtype=float), mesh.cells[mask])
    return float(m ** (m / 2) * vols.sum())


def image_cap(x, cap):
    """Predicate for T_x(cap): y is inside iff T_{-x}(y) lies in the cap."""
    return lambda y: cap_contains(cap, mobius(-np.asarray(x), y))


def metric_m_energy(F, mesh, g):
    """Discrete int |grad_g F|_g^m dv_g for the conformal metric g.

    For m = 2 this is sum_j F_j^T K_g F_j with the assembled stiffness,
    which does not depend on phi.  For other m the volume density e^{m phi}
    and the metric factor e^{-2 phi} are each averaged over cell vertices.
    """
    F = np.asarray(F, dtype=float)
    m = mesh.m
    if m == 2:
        K = stiffness_matrix(mesh)
        return float(np.einsum("ij,ij->", F, K @ F))
    phi = g.phi_on(mesh)
    vol_w = np.exp(m * phi)[mesh.cells].mean(axis=1)
    met_w = np.exp(-2.0 * phi)[mesh.cells].mean(axis=1)
    dens = cell_energy_density(F, mesh)
    return float(np.sum(mesh.volumes * vol_w * (met_w * dens) ** (m / 2)))


def conformal_invariance_check(mesh, x, p, omega, F=None, g=None):
    """Relative residuals of the three invariance identities of the m-energy.

    Returns a dict with

    ``mobius``: E(F o T_x; omega) vs E(F; T_x(omega))
    ``reflection``: E(F o R_p; omega) vs E(F; R_p(omega))
    ``metric``: E_g(F) vs E_{g0}(F) on the whole sphere (only when g given)

    `F` is a vectorized map from points to R^k (default: the identity).
    """
    if F is None:
        def F(y):
            return y
    y = mesh.vertices
    out = {}
    if not np.any(np.asarray(x) != 0):
        out["mobius"] = 0.0
    else:
        lhs = dirichlet_m_energy(F(mobius(x, y)), mesh, omega)
        rhs = dirichlet_m_energy(F(y), mesh, image_cap(x, omega))
        out["mobius"] = abs(lhs - rhs) / abs(rhs)
    lhs = dirichlet_m_energy(F(reflect(p, y)), mesh, omega)
    refl = (lambda z: cap_contains(omega, reflect(p, z)))
    rhs = dirichlet_m_energy(F(y), mesh, refl)
    out["reflection"] = abs(lhs - rhs) / abs(rhs)
    if g is not None:
        e_g = metric_m_energy(F(y), mesh, g)
        e_0 = dirichlet_m_energy(F(y), mesh)
        out["metric"] = abs(e_g - e_0) / abs(e_0)
    return out
