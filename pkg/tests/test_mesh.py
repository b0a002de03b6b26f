import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hdgcontrol.mesh import (
    MeshHierarchy,
    build_structured,
    face_geometry,
    nested_maps,
    read_mesh_sections,
    refine,
    write_mesh,
)

L = 1.0 / 8.0


@pytest.mark.parametrize(
    "n, nv, nt, nf, nb",
    [(1, 4, 2, 5, 4), (2, 9, 8, 16, 8), (3, 16, 18, 33, 12), (16, 289, 512, 800, 64)],
)
def test_counts(n, nv, nt, nf, nb):
    m = build_structured(L, n)
    assert (m.num_vertices, m.num_elements, m.num_faces) == (nv, nt, nf)
    assert m.boundary.sum() == nb
    assert nf - nb == 3 * n * n - 2 * n
    assert m.num_vertices - m.num_faces + m.num_elements == 1


@pytest.mark.parametrize("n", [1, 2, 5, 8])
def test_face_adjacency(n):
    m = build_structured(L, n)
    adj = (m.face_elements >= 0).sum(axis=1)
    assert np.all(adj[m.boundary] == 1)
    assert np.all(adj[~m.boundary] == 2)
    assert np.all(m.faces[:, 0] < m.faces[:, 1])
    # element_faces is consistent with face_elements
    for f in range(m.num_faces):
        for e in m.face_elements[f]:
            if e >= 0:
                assert f in m.element_faces[e]


@given(st.integers(1, 24), st.floats(1e-3, 1e3))
@settings(max_examples=30, deadline=None)
def test_areas_and_diameters(n, length):
    m = build_structured(length, n)
    assert np.all(m.areas > 0)
    assert m.areas.sum() == pytest.approx(length**2, rel=1e-14)
    assert m.diameters.max() / m.diameters.min() == 1.0
    assert np.allclose(m.diameters, np.sqrt(2) * length / n)


def test_diameter_matches_level():
    m = build_structured(L, 16)
    assert np.allclose(m.diameters, np.sqrt(2) / 128)
    assert m.h / np.sqrt(2) == pytest.approx(2.0**-7)


@pytest.mark.parametrize("n, length", [(0, 1.0), (-2, 1.0), (2, 0.0), (2, -1.0), (1.5, 1.0)])
def test_invalid_arguments(n, length):
    with pytest.raises(ValueError):
        build_structured(length, n)


def test_boundary_normal():
    m = build_structured(L, 2)
    f = next(i for i in m.boundary_faces
             if np.all(m.vertices[m.faces[i], 1] == 0.0))
    e = m.face_elements[f, 0]
    nrm, ell = face_geometry(m, f, e)
    assert np.allclose(nrm, [0.0, -1.0])
    assert ell == pytest.approx(1.0 / 16.0)


def test_diagonal_normals_opposite():
    m = build_structured(L, 1)
    f = m.interior_faces[0]
    e0, e1 = m.face_elements[f]
    n0, _ = face_geometry(m, f, e0)
    n1, _ = face_geometry(m, f, e1)
    s = 1 / np.sqrt(2)
    assert np.allclose(np.abs(n0), [s, s])
    assert np.isclose(n0[0], -n0[1])
    assert np.allclose(n0 + n1, 0.0)


def test_interior_normals_cancel_everywhere():
    m = build_structured(L, 4)
    for f in m.interior_faces:
        e0, e1 = m.face_elements[f]
        assert np.allclose(face_geometry(m, f, e0)[0] + face_geometry(m, f, e1)[0], 0.0)
        assert np.linalg.norm(face_geometry(m, f, e0)[0]) == pytest.approx(1.0)


def test_face_not_adjacent():
    m = build_structured(L, 2)
    f = next(i for i in range(m.num_faces) if 0 not in m.face_elements[i])
    with pytest.raises(ValueError):
        face_geometry(m, f, 0)


def test_refine_maps():
    coarse = build_structured(L, 1)
    fine, parent, face_parent = refine(coarse)
    assert fine.n == 2
    assert np.bincount(parent).tolist() == [4, 4]
    # every fine centroid lies in its parent triangle
    for e, p in enumerate(parent):
        tri = coarse.vertices[coarse.triangles[p]]
        c = fine.centroids[e]
        lam = np.linalg.solve(np.vstack([tri.T, np.ones(3)]), np.append(c, 1.0))
        assert np.all(lam > 0)
    bf = fine.boundary_faces
    assert np.all(coarse.boundary[face_parent[bf]])
    assert np.all(face_parent[fine.interior_faces] == -1)
    for f in bf:
        a, b = coarse.vertices[coarse.faces[face_parent[f]]]
        for x in fine.vertices[fine.faces[f]]:
            d, r = b - a, x - a
            assert abs(d[0] * r[1] - d[1] * r[0]) < 1e-15


def test_refine_keeps_coarse_vertices():
    coarse = build_structured(L, 2)
    fine, _, _ = refine(coarse)
    fine_set = {tuple(np.round(v, 15)) for v in fine.vertices}
    assert all(tuple(np.round(v, 15)) in fine_set for v in coarse.vertices)


def test_three_refinements():
    m = build_structured(L, 2)
    for _ in range(3):
        m, _, _ = refine(m)
    assert m.n == 16
    ref = build_structured(L, 16)
    assert np.array_equal(m.triangles, ref.triangles)
    assert np.allclose(m.vertices, ref.vertices)


def test_hierarchy_ancestors_match_geometry():
    hier = MeshHierarchy.from_sizes(L, [2, 16])
    assert [m.n for m in hier.levels] == [2, 4, 8, 16]
    anc = hier.ancestor_map(0, 3)
    direct, dface = nested_maps(hier.levels[0], hier.levels[3])
    assert np.array_equal(anc, direct)
    assert np.array_equal(hier.boundary_ancestor_map(0, 3), dface)


def test_hierarchy_rejects_non_nested():
    with pytest.raises(ValueError):
        MeshHierarchy.from_sizes(L, [2, 6])


def test_mesh_dump_roundtrip(tmp_path):
    m = build_structured(L, 2)
    path = tmp_path / "mesh.txt"
    write_mesh(m, path)
    sec = read_mesh_sections(path)
    assert np.allclose(sec["VERTICES"], m.vertices)
    assert np.array_equal(sec["TRIANGLES"].astype(int), m.triangles)
    assert np.array_equal(sec["FACES"][:, :2].astype(int), m.faces)
    assert np.array_equal(sec["FACES"][:, 2].astype(bool), m.boundary)
