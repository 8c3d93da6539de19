from dataclasses import dataclass

import numpy as np

from .basis import TruncatedBasis
from .design import TrainingDesign


@dataclass(eq=False)
class ReducedModel:
    problem_id: str
    design: TrainingDesign
    # basis over free dofs
    phi: TruncatedBasis
    dual_dict: np.ndarray
    primal_dict: np.ndarray
    # phi^T K_ff phi
    Kr: np.ndarray
    # phi^T K_fc: reduces imposed displacements into the load
    Kfc: np.ndarray
    free_dofs: np.ndarray
    constrained_dofs: np.ndarray
    delta: float
    tau: float
    stiffness_parametric: bool = False

    @property
    def rank(self):
        return self.phi.rank

    @property
    def dict_size(self):
        return self.dual_dict.shape[1]

    @property
    def column_norms(self):
        return np.linalg.norm(self.dual_dict, axis=0)
