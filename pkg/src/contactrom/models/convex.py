from dataclasses import dataclass

import numpy as np


@dataclass(eq=False)
class MonolithicDictionary:
    D_u: np.ndarray
    D_lam: np.ndarray
    # parameter point of each column
    labels: np.ndarray

    def __post_init__(self):
        if self.D_u.shape[1] != self.D_lam.shape[1]:
            raise ValueError("Primal and dual dictionaries differ in width")
        self.labels = np.asarray(self.labels, dtype=float).reshape(
            self.D_u.shape[1], -1
        )

    @property
    def size(self):
        return self.D_u.shape[1]


@dataclass(eq=False)
class ConvexResult:
    alpha: np.ndarray
    convex_defect: float
    penetration: float
    slackness: float
    sparsity: int
    u: np.ndarray = None
    lam: np.ndarray = None
    iterations: int = 0
