from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple, Union

import numpy as np

from .mesh import Mesh


@dataclass(eq=False)
class DirichletCondition:
    nodes: np.ndarray
    component: int
    # a constant, or a callable of the parameter vector
    value: Union[float, Callable[[np.ndarray], float]] = 0.0

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=np.int64)
        if self.nodes.size == 0:
            raise ValueError("Dirichlet condition without nodes")

    def evaluate(self, mu):
        if callable(self.value):
            return float(self.value(mu))
        return float(self.value)


@dataclass(frozen=True)
class SurfacePair:
    """Node-to-segment contact: slave nodes against master segments."""

    master: str
    slave: str


@dataclass(eq=False)
class RigidObstacle:
    """
    Node-to-rigid contact: every node in ``nodes`` must stay above the
    obstacle height (measured along the last displacement component).
    ``surface`` names the polyline used for dual quadrature weights.
    """

    surface: str
    nodes: np.ndarray
    heights: np.ndarray

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=np.int64)
        self.heights = np.asarray(self.heights, dtype=float)
        if self.nodes.shape != self.heights.shape:
            raise ValueError("Obstacle needs one height per node")


@dataclass(eq=False)
class ElasticProblem:
    problem_id: str
    mesh: Mesh
    # per body
    youngs_modulus: Tuple[float, ...]
    poisson_ratio: float
    dirichlet: List[DirichletCondition]
    contact: Union[SurfacePair, RigidObstacle]
    parameter_box: Tuple[Tuple[float, float], ...]
    parameter_names: Tuple[str, ...] = ()
    # uniform load per unit length along the transverse dof (bars only)
    line_load: float = 0.0
    # elementwise modulus E(centroids, mu); overrides youngs_modulus
    modulus_field: Optional[Callable[..., np.ndarray]] = None
    reference_mu: Optional[Tuple[float, ...]] = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not 0.0 <= self.poisson_ratio < 0.5:
            nu = self.poisson_ratio
            raise ValueError(f"Poisson ratio {nu} not in [0, 0.5)")
        self.youngs_modulus = tuple(float(e) for e in self.youngs_modulus)
        if any(e <= 0 for e in self.youngs_modulus):
            raise ValueError("Young's modulus must be positive")
        if len(self.youngs_modulus) < self.mesh.n_bodies:
            raise ValueError("One Young's modulus per body is required")
        self.parameter_box = tuple(
            (float(lo), float(hi)) for lo, hi in self.parameter_box
        )
        if not self.parameter_names:
            self.parameter_names = tuple(
                f"mu{i}" for i in range(len(self.parameter_box))
            )
        if self.reference_mu is None:
            self.reference_mu = tuple(
                0.5 * (lo + hi) for lo, hi in self.parameter_box
            )

    @property
    def n_parameters(self):
        return len(self.parameter_box)

    @property
    def body_pairs(self):
        if isinstance(self.contact, SurfacePair):
            return (self.contact.master, self.contact.slave)
        return (None, self.contact.surface)

    @property
    def slave_surface(self):
        return self.body_pairs[1]

    @property
    def is_stiffness_parametric(self):
        return self.modulus_field is not None
