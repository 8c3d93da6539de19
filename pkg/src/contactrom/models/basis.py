from dataclasses import dataclass

import numpy as np


@dataclass(eq=False)
class TruncatedBasis:
    # orthonormal columns, ordered by singular value
    vectors: np.ndarray
    # kept singular values, nonincreasing
    singular_values: np.ndarray
    delta: float
    # full spectrum, for reports
    spectrum: np.ndarray = None

    @property
    def rank(self):
        return self.vectors.shape[1]

    @property
    def energy_fraction(self):
        if self.spectrum is None:
            return 1.0
        total = float(np.sum(self.spectrum**2))
        return float(np.sum(self.singular_values**2)) / total
