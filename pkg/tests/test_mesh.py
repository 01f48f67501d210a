import numpy as np
import pytest

from matmi.mesh import build_mesh, triangle_geometry


def test_node_and_element_counts():
    m = build_mesh(2, 2)
    assert m.n_nodes == 9
    assert m.n_elements == 8


def test_paper_mesh_size():
    m = build_mesh(64, 64)
    assert m.n_nodes == 4225
    assert m.n_elements == 8192
    assert m.dx == pytest.approx(1.0 / 64)


def test_total_area_exact():
    m = build_mesh(1, 1)
    assert m.element_areas.sum() == 1.0


def test_areas_congruent():
    m = build_mesh(2, 2)
    np.testing.assert_allclose(m.element_areas, 0.125)


def test_rejects_bad_arguments():
    with pytest.raises(ValueError):
        build_mesh(0, 4)
    with pytest.raises(ValueError):
        build_mesh(4, -1)
    with pytest.raises(ValueError):
        build_mesh(4, 4, (0.0, 0.0, 0.0, 1.0))


def test_triangle_geometry_hand_values():
    # P1 barycentric gradients on the unit right triangle, by hand
    area, grads = triangle_geometry(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
    assert area == pytest.approx(0.5)
    np.testing.assert_allclose(grads[0], [-1.0, -1.0], atol=1e-14)
    np.testing.assert_allclose(grads[1], [1.0, 0.0], atol=1e-14)
    np.testing.assert_allclose(grads[2], [0.0, 1.0], atol=1e-14)


def test_triangle_geometry_rejects_degenerate():
    with pytest.raises(ValueError):
        triangle_geometry(np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]))


def test_basis_gradients_partition_of_unity():
    m = build_mesh(5, 3, (0.0, 2.0, -1.0, 1.0))
    assert np.abs(m.element_gradients.sum(axis=1)).max() <= 1e-14


def test_element_area_matches_cross_product():
    m = build_mesh(4, 7, (0.0, 3.0, 0.0, 1.0))
    p = m.nodes[m.elements]
    cross = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (
        p[:, 1, 1] - p[:, 0, 1]
    ) * (p[:, 2, 0] - p[:, 0, 0])
    np.testing.assert_allclose(m.element_areas, 0.5 * cross, rtol=1e-14)


def test_boundary_nodes_on_rectangle():
    m = build_mesh(6, 9, (0.0, 2.0, 1.0, 4.0))
    pts = m.nodes[m.boundary_nodes]
    on_edge = (
        np.isclose(pts[:, 0], 0.0, atol=1e-14) | np.isclose(pts[:, 0], 2.0, atol=1e-14)
        | np.isclose(pts[:, 1], 1.0, atol=1e-14) | np.isclose(pts[:, 1], 4.0, atol=1e-14)
    )
    assert on_edge.all()
    assert len(m.boundary_nodes) == 2 * 6 + 2 * 9


def test_conforming_interior_edges():
    m = build_mesh(4, 5)
    counts = {}
    for tri in m.elements:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            counts[frozenset((a, b))] = counts.get(frozenset((a, b)), 0) + 1
    boundary = set(m.boundary_nodes)
    for edge, count in counts.items():
        if edge <= boundary and count == 1:
            continue  # boundary edge
        assert count == 2, f"interior edge {sorted(edge)} shared by {count} elements"


def test_refinement_nesting():
    coarse = build_mesh(6, 6, (0.0, 1.0, 0.0, 2.0))
    fine = build_mesh(12, 12, (0.0, 1.0, 0.0, 2.0))
    ii = np.arange(7) * 2
    idx = (ii[:, None] * 13 + ii[None, :]).ravel()  # (2j)*(nx_f+1) + 2i
    jj, kk = np.meshgrid(np.arange(7) * 2, np.arange(7) * 2, indexing="ij")
    idx = (jj * 13 + kk).ravel()
    np.testing.assert_allclose(
        fine.nodes[idx].reshape(7, 7, 2),
        coarse.nodes.reshape(7, 7, 2),
        atol=1e-14,
    )


def test_affine_reproduction_at_centroids():
    from matmi import fem

    m = build_mesh(9, 4, (0.0, 1.5, -0.5, 0.5))
    f = fem.interpolate(m, lambda x, y: 1.7 + 0.3 * x - 1.1 * y)
    at_centroids = fem.element_means(f)
    exact = 1.7 + 0.3 * m.element_centroids[:, 0] - 1.1 * m.element_centroids[:, 1]
    np.testing.assert_allclose(at_centroids, exact, rtol=1e-13)
