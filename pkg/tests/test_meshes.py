import numpy as np
import pytest

from contactrom.fem import quad_geometry
from contactrom.meshes import (
    half_disc,
    interval,
    load_mesh,
    merge,
    rectangle,
    save_mesh,
)


def _outward_normals(mesh, tag):
    segs = mesh.surfaces[tag]
    X = mesh.node_coords
    t = X[segs[:, 1]] - X[segs[:, 0]]
    return np.column_stack([t[:, 1], -t[:, 0]]), 0.5 * (
        X[segs[:, 0]] + X[segs[:, 1]]
    )


def test_rectangle_counts_and_tags():
    mesh = rectangle(0.0, 0.0, 2.0, 1.0, 5, 3)
    assert mesh.n_nodes == 15
    assert mesh.n_elements == 8
    assert mesh.n_dofs == 30
    assert sorted(mesh.surface_tags) == ["bottom", "left", "right", "top"]
    assert len(mesh.surface_nodes("top")) == 5
    assert len(mesh.surface_nodes("left")) == 3


def test_rectangle_surfaces_face_outward():
    mesh = rectangle(0.0, 0.0, 1.0, 1.0, 4, 4)
    centre = np.array([0.5, 0.5])
    for tag in mesh.surface_tags:
        n, mid = _outward_normals(mesh, tag)
        assert np.all(np.einsum("sd,sd->s", n, mid - centre) > 0)


def test_rectangle_quads_are_positive():
    mesh = rectangle(0.0, 0.0, 1.0, 1.0, 4, 3)
    _, det = quad_geometry(mesh.node_coords[mesh.elements])
    assert np.all(det > 0)


@pytest.mark.parametrize("facing", ["up", "down"])
def test_half_disc_geometry(facing):
    mesh = half_disc((0.0, 0.0), 1.0, 38, 20, facing=facing)
    arc = mesh.surface_nodes("arc")
    assert len(arc) == 79
    r = np.linalg.norm(mesh.node_coords[arc], axis=1)
    assert np.allclose(r, 1.0, atol=1e-12)
    flat = mesh.surface_nodes("flat")
    assert np.allclose(mesh.node_coords[flat, 1], 0.0)
    _, det = quad_geometry(mesh.node_coords[mesh.elements])
    assert np.all(det > 0)
    # arc bulges away from the flat edge
    y = mesh.node_coords[arc, 1]
    assert np.all(y >= -1e-12) if facing == "up" else np.all(y <= 1e-12)


def test_half_disc_surfaces_face_outward():
    mesh = half_disc((0.0, 0.0), 1.0, 10, 4, facing="down")
    n, mid = _outward_normals(mesh, "arc")
    assert np.all(np.einsum("sd,sd->s", n, mid) > 0)


def test_half_disc_rejects_odd_arc():
    with pytest.raises(ValueError):
        half_disc((0.0, 0.0), 1.0, 7, 3)


def test_interval():
    mesh = interval(11, 2.0)
    assert mesh.dim == 1
    assert mesh.n_dofs == 11
    assert np.isclose(mesh.node_coords[-1, 0], 2.0)
    assert len(mesh.surface_nodes("line")) == 11


def test_merge_prefixes_and_offsets():
    a = rectangle(0.0, 0.0, 1.0, 1.0, 3, 3)
    b = rectangle(0.0, 1.0, 1.0, 1.0, 3, 3)
    mesh = merge(lower=a, upper=b)
    assert mesh.n_nodes == 18
    assert mesh.n_bodies == 2
    assert "upper.bottom" in mesh.surface_tags
    assert mesh.surface_nodes("upper.bottom").min() >= 9
    assert np.array_equal(np.unique(mesh.element_body), [0, 1])


def test_mesh_files_round_trip(tmp_path):
    mesh = merge(
        lower=half_disc((0.0, 0.0), 1.0, 6, 2),
        upper=half_disc((0.0, 2.0), 1.0, 6, 2, facing="down"),
    )
    save_mesh(mesh, tmp_path / "m")
    back = load_mesh(tmp_path / "m")
    assert np.array_equal(back.node_coords, mesh.node_coords)
    assert np.array_equal(back.elements, mesh.elements)
    assert np.array_equal(back.element_body, mesh.element_body)
    for tag in mesh.surface_tags:
        assert np.array_equal(back.surfaces[tag], mesh.surfaces[tag])
