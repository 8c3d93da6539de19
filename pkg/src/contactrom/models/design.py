from dataclasses import dataclass
from enum import IntEnum, unique
from typing import Tuple

import numpy as np


@unique
class Scheme(IntEnum):

    UNIFORM, NESTED, MIDPOINTS, COMPLEMENT, EXPLICIT = range(5)

    def __str__(self):
        return self.name.lower()


@dataclass(eq=False)
class TrainingDesign:
    parameter_box: Tuple[Tuple[float, float], ...]
    scheme: Scheme
    # points per axis for uniform, level for nested
    size: int
    # (n_points, n_parameters), lexicographic
    points: np.ndarray

    def __len__(self):
        return self.points.shape[0]

    @property
    def label(self):
        if self.scheme == Scheme.EXPLICIT:
            return str(self.scheme)
        return f"{self.scheme}:{self.size}"

    def to_dict(self):
        return {
            "parameter_box": [list(b) for b in self.parameter_box],
            "scheme": str(self.scheme),
            "size": self.size,
            "points": self.points.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            parameter_box=tuple(tuple(b) for b in data["parameter_box"]),
            scheme=Scheme[data["scheme"].upper()],
            size=int(data["size"]),
            points=np.asarray(data["points"], dtype=float).reshape(
                -1, len(data["parameter_box"])
            ),
        )
