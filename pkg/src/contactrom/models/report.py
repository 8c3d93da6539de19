from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

# active columns at most this many dictionary positions from the training
# points bracketing a query count as local
BRACKET_REACH = 2


@dataclass(eq=False)
class QueryPoint:
    mu: np.ndarray
    primal_err: float
    dual_err: float
    iterations: int
    # selected dictionary columns and their coefficients
    active: List[int]
    coeffs: List[float]
    converged: bool
    reason: str
    wall_time: float = 0.0
    per_iter_time: float = 0.0
    operator_time: float = 0.0
    hf_time: float = 0.0
    dropped: List[int] = field(default_factory=list)
    # None for multi-parameter designs
    bracket_offset: Optional[int] = None

    @property
    def failed(self):
        return self.reason == "failed"


def _mean(values):
    values = np.asarray(values, dtype=float)
    values = values[np.isfinite(values)]
    return float(values.mean()) if values.size else float("nan")


@dataclass(eq=False)
class QueryReport:
    problem_id: str
    parameter_names: tuple
    rows: List[QueryPoint] = field(default_factory=list)
    dict_size: int = 0
    rank: int = 0
    delta: float = 0.0
    tau: float = 0.0

    def __len__(self):
        return len(self.rows)

    @property
    def ok_rows(self):
        return [r for r in self.rows if not r.failed]

    @property
    def mean_primal(self):
        return _mean([r.primal_err for r in self.ok_rows])

    @property
    def mean_dual(self):
        return _mean([r.dual_err for r in self.ok_rows])

    @property
    def mean_iterations(self):
        return _mean([r.iterations for r in self.ok_rows])

    @property
    def mean_time(self):
        return _mean([r.wall_time for r in self.ok_rows])

    @property
    def mean_iter_time(self):
        return _mean([r.per_iter_time for r in self.ok_rows])

    @property
    def mean_hf_time(self):
        return _mean([r.hf_time for r in self.ok_rows])

    @property
    def speedup(self):
        if not self.mean_time > 0.0:
            return float("nan")
        return self.mean_hf_time / self.mean_time

    @property
    def median_active(self):
        sizes = [len(r.active) for r in self.ok_rows]
        return float(np.median(sizes)) if sizes else float("nan")

    @property
    def bracket_hit_fraction(self):
        """
        Share of converged queries whose active columns all lie within
        ``BRACKET_REACH`` of the bracketing training points.
        """
        offsets = [
            r.bracket_offset
            for r in self.ok_rows
            if r.converged and r.bracket_offset is not None
        ]
        if not offsets:
            return float("nan")
        return sum(1 for o in offsets if o <= BRACKET_REACH) / len(offsets)

    @property
    def n_unconverged(self):
        return sum(1 for r in self.rows if not r.converged)

    def sparsity_pattern(self):
        """(point, column, coefficient) triples of every selected column."""
        return [
            (i, col, val)
            for i, r in enumerate(self.rows)
            for col, val in zip(r.active, r.coeffs)
        ]

    def summary(self):
        return {
            "problem": self.problem_id,
            "points": len(self.rows),
            "failed": sum(1 for r in self.rows if r.failed),
            "unconverged": self.n_unconverged,
            "dict_size": self.dict_size,
            "rank": self.rank,
            "delta": self.delta,
            "tau": self.tau,
            "mean_primal_err": self.mean_primal,
            "mean_dual_err": self.mean_dual,
            "mean_iterations": self.mean_iterations,
            "median_active": self.median_active,
            "bracket_hit_fraction": self.bracket_hit_fraction,
            "mean_time": self.mean_time,
            "mean_iter_time": self.mean_iter_time,
            "mean_hf_time": self.mean_hf_time,
            "speedup": self.speedup,
        }
