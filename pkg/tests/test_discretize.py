import json
from itertools import combinations

import numpy as np
import pytest
from scipy import integrate

from lambda2sphere.discretize import (ConformalMetric, Mesh, MeshError, assemble, build_mesh,
                                      interpolate, mesh_from_off, random_harmonic_metric,
                                      stiffness_matrix, volume_measure)
from lambda2sphere.harmonics import harmonic, label_m2, sphere_volume


def test_icosahedron_counts():
    mesh = build_mesh(2, 0)
    assert mesh.n_vertices == 12 and len(mesh.cells) == 20


@pytest.mark.parametrize("level", range(5))
def test_icosphere_vertex_formula(level):
    mesh = build_mesh(2, level)
    assert mesh.n_vertices == 10 * 4 ** level + 2
    assert len(mesh.cells) == 20 * 4 ** level
    # closed surface: V - E + F = 2
    edges = {tuple(sorted(e)) for c in mesh.cells for e in ((c[0], c[1]), (c[1], c[2]), (c[0], c[2]))}
    assert mesh.n_vertices - len(edges) + len(mesh.cells) == 2


def _edges(cells):
    return {tuple(sorted(e)) for c in cells for e in combinations(c, 2)}


def test_cross_polytope_counts():
    prev = build_mesh(3, 0)
    assert (prev.n_vertices, len(prev.cells)) == (8, 16)
    for level in (1, 2, 3):
        mesh = build_mesh(3, level)
        # one new vertex per edge, eight children per tetrahedron
        assert mesh.n_vertices == prev.n_vertices + len(_edges(prev.cells))
        assert len(mesh.cells) == 8 * len(prev.cells)
        faces = {tuple(sorted(f)) for c in mesh.cells for f in combinations(c, 3)}
        assert mesh.n_vertices - len(_edges(mesh.cells)) + len(faces) - len(mesh.cells) == 0
        prev = mesh
    assert prev.n_vertices == 1408


@pytest.mark.parametrize("m, level", [(2, 3), (3, 2)])
def test_cells_positively_oriented(m, level):
    mesh = build_mesh(m, level)
    assert np.all(np.linalg.det(mesh.vertices[mesh.cells]) > 0)
    assert np.allclose(np.linalg.norm(mesh.vertices, axis=1), 1)


def test_unsupported_dimension():
    with pytest.raises(ValueError):
        build_mesh(4, 1)


def test_degenerate_cell_reported():
    v = build_mesh(2, 0).vertices
    cells = np.array([[0, 1, 1]])
    with pytest.raises(MeshError, match="cell 0"):
        Mesh(v, cells, 0)


def test_round_volume_level5(ico5):
    assert abs(ico5.weights.sum() / (4 * np.pi) - 1) < 1e-3


def test_volume_convergence():
    err = [abs(build_mesh(2, L).weights.sum() - 4 * np.pi) for L in (2, 3, 4)]
    assert err[0] > err[1] > err[2]


def test_constant_metric_volume(ico5):
    mu = volume_measure(ConformalMetric.constant(2, np.log(2)), ico5)
    assert abs(mu.mass / (16 * np.pi) - 1) < 1e-3


def test_volume_against_polar_quadrature(ico5):
    g = ConformalMetric.from_terms(2, 1, {label_m2(1, 0): 0.3})
    a = np.sqrt(3 / (4 * np.pi))
    oracle, _ = integrate.quad(lambda th: 2 * np.pi * np.sin(th) * np.exp(2 * 0.3 * a * np.cos(th)),
                               0, np.pi, epsabs=1e-13)
    assert abs(volume_measure(g, ico5).mass / oracle - 1) < 5e-3


def test_stiffness_phi_independent_m2(ico3):
    g = random_harmonic_metric(np.random.default_rng(0), 2, 4)
    K0 = assemble(ConformalMetric.round(2), ico3).stiffness
    K1 = assemble(g, ico3).stiffness
    assert abs(K0 - K1).max() == 0.0


@pytest.mark.parametrize("m, level", [(2, 3), (3, 2)])
def test_constants_in_kernel(m, level):
    mesh = build_mesh(m, level)
    g = random_harmonic_metric(np.random.default_rng(1), m, 2)
    K = assemble(g, mesh).stiffness
    assert np.abs(K @ np.ones(mesh.n_vertices)).max() <= 1e-12 * abs(K).max()
    assert abs(K - K.T).max() == 0


def test_mass_is_volume_measure(ico3):
    g = random_harmonic_metric(np.random.default_rng(2), 2, 3)
    pair = assemble(g, ico3)
    assert np.allclose(pair.mass.diagonal(), volume_measure(g, ico3).weights, rtol=0, atol=0)
    assert pair.volume == pytest.approx(volume_measure(g, ico3).mass, rel=1e-14)


def test_weighted_stiffness_scales():
    mesh = build_mesh(3, 1)
    K = stiffness_matrix(mesh)
    K2 = stiffness_matrix(mesh, np.full(len(mesh.cells), 2.0))
    assert abs(K2 - 2 * K).max() < 1e-14


def test_interpolate_constant_harmonic(rng):
    g = ConformalMetric(2, "harmonic", [0.7])
    y = rng.standard_normal((10, 3))
    y /= np.linalg.norm(y, axis=1, keepdims=True)
    assert np.allclose(interpolate(g, y), 0.7 / np.sqrt(4 * np.pi))


def test_interpolate_nodal_at_vertex(ico3, rng):
    vals = rng.standard_normal(ico3.n_vertices)
    g = ConformalMetric(2, "nodal", vals, ico3)
    idx = [0, 17, 200, 641]
    assert np.allclose(interpolate(g, ico3.vertices[idx]), vals[idx], atol=1e-13)


def test_interpolate_y10_poles():
    g = ConformalMetric.from_terms(2, 1, {label_m2(1, 0): 1.0})
    top = interpolate(g, np.array([0, 0, 1.0]))
    bottom = interpolate(g, np.array([0, 0, -1.0]))
    assert np.isclose(top, np.sqrt(3 / (4 * np.pi))) and np.isclose(bottom, -top)


def test_nodal_interpolation_is_linear(ico3):
    # a linear function is reproduced inside cells up to projection effects
    vals = ico3.vertices[:, 2]
    g = ConformalMetric(2, "nodal", vals, ico3)
    c = ico3.cell_centroids()[:50]
    assert np.abs(interpolate(g, c) - c[:, 2]).max() < 0.02


def test_shifted_adds_constant(ico3, rng):
    g = random_harmonic_metric(rng, 2, 3)
    y = ico3.vertices[:20]
    assert np.allclose(g.shifted(0.5).phi(y), g.phi(y) + 0.5)
    h = ConformalMetric(2, "nodal", g.phi_on(ico3), ico3)
    assert np.allclose(h.shifted(-1).phi_on(ico3), h.phi_on(ico3) - 1)


def test_metric_json_roundtrip(ico3, rng):
    g = random_harmonic_metric(rng, 3, 2)
    back = ConformalMetric.from_json(g.to_json())
    assert back.kind == "harmonic" and np.array_equal(back.data, g.data)
    h = ConformalMetric(2, "nodal", rng.standard_normal(ico3.n_vertices), ico3)
    doc = json.loads(h.to_json())
    assert set(doc) == {"m", "type", "values"}
    assert np.array_equal(ConformalMetric.from_json(h.to_json(), ico3).data, h.data)


def test_metric_validation(ico3):
    with pytest.raises(ValueError):
        ConformalMetric(2, "harmonic", [0.0, 1.0])   # not a full degree range
    with pytest.raises(ValueError):
        ConformalMetric(2, "nodal", np.zeros(5), ico3)
    with pytest.raises(ValueError):
        ConformalMetric(2, "harmonic", [np.nan])


def test_random_metric_range(rng):
    g = random_harmonic_metric(rng, 2, 4, amplitude=0.5)
    assert g.data[0] == 0 and np.abs(g.data).max() <= 0.5 and len(g.data) == 25


def test_off_roundtrip():
    mesh = build_mesh(2, 1)
    back = mesh_from_off(mesh.to_off())
    assert np.array_equal(back.cells, mesh.cells)
    assert np.array_equal(back.vertices, mesh.vertices)


def test_locate_returns_barycentric(ico3, rng):
    y = rng.standard_normal((100, 3))
    y /= np.linalg.norm(y, axis=1, keepdims=True)
    idx, bary = ico3.locate(y)
    assert np.all(bary >= -1e-12)
    assert np.allclose(bary.sum(axis=1), 1)
    # barycentric combination points in the direction of y
    rec = np.einsum("ij,ijk->ik", bary, ico3.vertices[ico3.cells[idx]])
    rec /= np.linalg.norm(rec, axis=1, keepdims=True)
    assert np.allclose(rec, y, atol=1e-12)


def test_harmonic_first_mode_volume(ico5):
    # int e^{2 phi} with phi = 0.3 Y_10 against the vertex quadrature of the same integrand
    g = ConformalMetric.from_terms(2, 1, {label_m2(1, 0): 0.3})
    direct = ico5.weights @ np.exp(2 * 0.3 * harmonic(label_m2(1, 0), ico5.vertices))
    assert volume_measure(g, ico5).mass == pytest.approx(direct, rel=1e-13)
    assert sphere_volume(2) == pytest.approx(4 * np.pi)
