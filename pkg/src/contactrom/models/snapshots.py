from dataclasses import dataclass

import numpy as np

from .design import TrainingDesign


@dataclass(eq=False)
class SnapshotSet:
    design: TrainingDesign
    # full displacement per column
    U: np.ndarray
    # contact multipliers per column, one row per slave node
    Lam: np.ndarray
    solve_times: np.ndarray
    problem_id: str
    # KKT residuals stamped at generation, (n_points, 4)
    residuals: np.ndarray = None

    def __len__(self):
        return self.U.shape[1]
