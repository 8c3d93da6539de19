from dataclasses import dataclass

import numpy as np


@dataclass(eq=False)
class SparseCoeffs:
    values: np.ndarray
    support: np.ndarray
    iterations: int
    residual_norm: float
    converged: bool = True
    # column norms the dictionary was normalized by, when it was
    scale: np.ndarray = None

    @property
    def sparsity(self):
        return len(self.support)
