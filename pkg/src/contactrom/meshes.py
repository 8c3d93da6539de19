"""
Benchmark mesh generators and mesh files.

All generators emit counter-clockwise quads and counter-clockwise surface
polylines. A mesh file is a directory holding ``mesh.json`` (elements,
bodies, surfaces) and ``coords.bin`` (raw node coordinates).
"""
import json
from pathlib import Path

import numpy as np

from .lib.blocks import read_block, write_block
from .lib.logger import debug
from .models.mesh import Mesh

MESH_FORMAT = 1


def _segments(nodes):
    nodes = np.asarray(nodes, dtype=np.int64)
    return np.column_stack([nodes[:-1], nodes[1:]])


def _grid_quads(nx, ny):
    """Counter-clockwise quads of an nx-by-ny node grid, row-major nodes."""
    i, j = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1))
    n0 = (j * nx + i).ravel()
    return np.column_stack([n0, n0 + 1, n0 + nx + 1, n0 + nx])


def rectangle(x0, y0, width, height, nx, ny):
    """
    Structured ``nx`` x ``ny`` node rectangle with surfaces ``bottom``,
    ``right``, ``top`` and ``left``.
    """
    if nx < 2 or ny < 2:
        raise ValueError("A rectangle needs at least 2 nodes per side")
    xs = x0 + width * np.arange(nx) / (nx - 1)
    ys = y0 + height * np.arange(ny) / (ny - 1)
    X, Y = np.meshgrid(xs, ys)
    coords = np.column_stack([X.ravel(), Y.ravel()])

    def idx(i, j):
        return j * nx + i

    surfaces = {
        "bottom": _segments([idx(i, 0) for i in range(nx)]),
        "right": _segments([idx(nx - 1, j) for j in range(ny)]),
        "top": _segments([idx(i, ny - 1) for i in range(nx - 1, -1, -1)]),
        "left": _segments([idx(0, j) for j in range(ny - 1, -1, -1)]),
    }
    return Mesh(2, coords, _grid_quads(nx, ny), surfaces)


def half_disc(center, radius, n_arc, n_side, facing="up"):
    """
    Half-disc meshed by a Coons patch over an ``(n_arc+1) x (n_side+1)`` grid.

    The flat edge is one side of the patch; the arc is split over the three
    others (a quarter of it on each short side, the middle half opposite the
    flat edge), so the arc carries ``n_arc + 2 * n_side`` segments. With
    ``facing="up"`` the arc is above the flat edge. Surfaces: ``arc`` and
    ``flat``.
    """
    if facing not in ("up", "down"):
        raise ValueError(f"facing must be 'up' or 'down', got {facing!r}")
    if n_arc < 2 or n_arc % 2 or n_side < 1:
        raise ValueError("n_arc must be even and at least 2, n_side positive")
    cx, cy = center
    ns, nt = n_arc, n_side

    def on_arc(theta):
        return np.column_stack(
            [cx + radius * np.cos(theta), cy + radius * np.sin(theta)]
        )

    def flat(s):
        return np.column_stack([cx + radius * (2 * s - 1), cy + 0 * s])

    s = np.arange(ns + 1) / ns
    t = np.arange(nt + 1) / nt
    if facing == "up":
        bottom, top = flat(s), on_arc(0.75 * np.pi - 0.5 * np.pi * s)
        left = on_arc(np.pi - 0.25 * np.pi * t)
        right = on_arc(0.25 * np.pi * t)
    else:
        bottom, top = on_arc(1.25 * np.pi + 0.5 * np.pi * s), flat(s)
        left = on_arc(1.25 * np.pi - 0.25 * np.pi * t)
        right = on_arc(1.75 * np.pi + 0.25 * np.pi * t)

    S, T = np.meshgrid(s, t)
    S, T = S[..., None], T[..., None]
    P = (
        (1 - T) * bottom[None, :, :]
        + T * top[None, :, :]
        + (1 - S) * left[:, None, :]
        + S * right[:, None, :]
        - (1 - S) * (1 - T) * bottom[0]
        - S * (1 - T) * bottom[-1]
        - (1 - S) * T * top[0]
        - S * T * top[-1]
    )
    # pin boundary nodes exactly onto their curves
    P[0, :, :], P[-1, :, :] = bottom, top
    P[:, 0, :], P[:, -1, :] = left, right
    coords = P.reshape(-1, 2)

    def idx(i, j):
        return j * (ns + 1) + i

    if facing == "up":
        arc = (
            [idx(ns, j) for j in range(nt + 1)]
            + [idx(i, nt) for i in range(ns - 1, -1, -1)]
            + [idx(0, j) for j in range(nt - 1, -1, -1)]
        )
        flat_edge = [idx(i, 0) for i in range(ns + 1)]
    else:
        arc = (
            [idx(0, j) for j in range(nt, -1, -1)]
            + [idx(i, 0) for i in range(1, ns + 1)]
            + [idx(ns, j) for j in range(1, nt + 1)]
        )
        flat_edge = [idx(i, nt) for i in range(ns, -1, -1)]
    surfaces = {"arc": _segments(arc), "flat": _segments(flat_edge)}
    return Mesh(2, coords, _grid_quads(ns + 1, nt + 1), surfaces)


def interval(n_nodes, length=1.0):
    """Uniform bar mesh on [0, length] with the single surface ``line``."""
    if n_nodes < 2:
        raise ValueError("An interval needs at least 2 nodes")
    x = length * np.arange(n_nodes) / (n_nodes - 1)
    nodes = np.arange(n_nodes)
    return Mesh(1, x[:, None], _segments(nodes), {"line": _segments(nodes)})


def merge(**bodies):
    """
    Stack meshes into one, one body each in keyword order. Surfaces are
    renamed ``<body>.<surface>``.
    """
    coords, elements, owners, surfaces = [], [], [], {}
    offset = 0
    dims = {m.dim for m in bodies.values()}
    if len(dims) != 1:
        raise ValueError("Cannot merge meshes of different dimension")
    for body, (name, mesh) in enumerate(bodies.items()):
        coords.append(mesh.node_coords)
        elements.append(mesh.elements + offset)
        owners.append(np.full(mesh.n_elements, body, dtype=np.int64))
        for tag, segs in mesh.surfaces.items():
            surfaces[f"{name}.{tag}"] = segs + offset
        offset += mesh.n_nodes
    mesh = Mesh(
        dims.pop(),
        np.vstack(coords),
        np.vstack(elements),
        surfaces,
        np.concatenate(owners),
    )
    debug(
        f"MESH: merged {len(bodies)} bodies, {mesh.n_nodes} nodes, "
        f"{mesh.n_elements} elements"
    )
    return mesh


def save_mesh(mesh, path):
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format": MESH_FORMAT,
        "dim": mesh.dim,
        "nodes": write_block(path, "coords.bin", mesh.node_coords),
        "elements": mesh.elements.tolist(),
        "element_body": mesh.element_body.tolist(),
        "surfaces": {k: v.tolist() for k, v in mesh.surfaces.items()},
    }
    (path / "mesh.json").write_text(json.dumps(manifest, indent=1))
    return path


def load_mesh(path):
    path = Path(path)
    manifest = json.loads((path / "mesh.json").read_text())
    if manifest.get("format") != MESH_FORMAT:
        raise ValueError(f"Unsupported mesh format {manifest.get('format')}")
    dim = int(manifest["dim"])
    return Mesh(
        dim,
        read_block(path, manifest["nodes"]),
        np.asarray(manifest["elements"], dtype=np.int64).reshape(
            -1, 2 if dim == 1 else 4
        ),
        {k: np.asarray(v) for k, v in manifest["surfaces"].items()},
        np.asarray(manifest["element_body"], dtype=np.int64),
    )
