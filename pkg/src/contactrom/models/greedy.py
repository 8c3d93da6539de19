from dataclasses import dataclass, field
from enum import IntEnum, unique
from typing import List

import numpy as np
from ordered_set import OrderedSet


@unique
class StopReason(IntEnum):

    CONVERGED, K_MAX, OSCILLATION, DEPENDENT = range(4)

    def __str__(self):
        return self.name.lower()


@dataclass(eq=False)
class GreedyState:
    u_hat: np.ndarray
    lam_hat: np.ndarray
    # insertion ordered: the last element is the most recently added
    active: OrderedSet = field(default_factory=OrderedSet)
    k: int = 0
    k_max: int = 50
    conv_tol: float = 1e-5


@dataclass(eq=False)
class OnlineResult:
    u: np.ndarray
    lam: np.ndarray
    coeffs: GreedyState
    converged: bool
    wall_time: float
    per_iter_time: float
    # time spent rebuilding pairings and projected constraints
    operator_time: float = 0.0
    reason: StopReason = StopReason.CONVERGED
    # columns dropped for linear dependence
    dropped: List[int] = field(default_factory=list)

    @property
    def iterations(self):
        return self.coeffs.k

    @property
    def active(self):
        return list(self.coeffs.active)
