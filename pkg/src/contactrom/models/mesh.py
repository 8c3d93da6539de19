from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np


@dataclass(eq=False)
class Mesh:
    """
    Nodes, elements and tagged boundary polylines of one or more bodies.

    ``dim`` is 1 for bars (one transverse dof per node) and 2 for plane quads
    (two dofs per node, interleaved as x0, y0, x1, y1, ...). Quads are
    counter-clockwise. Surface polylines follow the counter-clockwise boundary
    of their body, so a segment's outward normal is its tangent rotated
    clockwise.
    """

    dim: int
    node_coords: np.ndarray
    elements: np.ndarray
    surfaces: Dict[str, np.ndarray] = field(default_factory=dict)
    element_body: np.ndarray = None

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"Mesh dimension must be 1 or 2, got {self.dim}")
        self.node_coords = np.asarray(self.node_coords, dtype=float)
        if self.node_coords.ndim == 1:
            self.node_coords = self.node_coords[:, None]
        self.elements = np.asarray(self.elements, dtype=np.int64)
        nen = 2 if self.dim == 1 else 4
        if self.elements.ndim != 2 or self.elements.shape[1] != nen:
            raise ValueError(f"Elements of a {self.dim}D mesh need {nen} nodes")
        if self.elements.size and (
            self.elements.min() < 0 or self.elements.max() >= self.n_nodes
        ):
            raise ValueError("Element node index out of range")
        if self.element_body is None:
            self.element_body = np.zeros(len(self.elements), dtype=np.int64)
        self.element_body = np.asarray(self.element_body, dtype=np.int64)
        surfaces = {}
        for name, segs in self.surfaces.items():
            segs = np.asarray(segs, dtype=np.int64).reshape(-1, 2)
            if segs.size and (segs.min() < 0 or segs.max() >= self.n_nodes):
                raise ValueError(f"Surface '{name}' references a missing node")
            if np.any(segs[1:, 0] != segs[:-1, 1]):
                raise ValueError(f"Surface '{name}' is not one polyline")
            surfaces[name] = segs
        self.surfaces = surfaces

    @property
    def n_nodes(self):
        return self.node_coords.shape[0]

    @property
    def n_elements(self):
        return self.elements.shape[0]

    @property
    def dofs_per_node(self):
        return self.dim

    @property
    def n_dofs(self):
        return self.n_nodes * self.dofs_per_node

    @property
    def surface_tags(self) -> List[str]:
        return list(self.surfaces)

    @property
    def n_bodies(self):
        return int(self.element_body.max()) + 1 if self.n_elements else 0

    def surface_nodes(self, tag):
        """Nodes of a surface polyline, in polyline order."""
        try:
            segs = self.surfaces[tag]
        except KeyError:
            raise KeyError(f"No surface tagged '{tag}'") from None
        if len(segs) == 0:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate([segs[:, 0], segs[-1:, 1]])

    def node_dofs(self, nodes, component=None):
        nodes = np.asarray(nodes, dtype=np.int64)
        ndpn = self.dofs_per_node
        if component is None:
            return (nodes[:, None] * ndpn + np.arange(ndpn)).ravel()
        return nodes * ndpn + component

    def centroids(self):
        return self.node_coords[self.elements].mean(axis=1)
