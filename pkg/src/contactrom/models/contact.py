from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np


class KKTResiduals(NamedTuple):
    equilibrium: float
    penetration: float
    negativity: float
    slackness: float

    def worst(self):
        return max(self)


@dataclass(eq=False)
class ContactSystem:
    """
    Linearized node-to-segment constraints ``C u - g <= 0`` at one pairing.

    Row i belongs to ``slave_nodes[i]``. Rows are stored as short gathers
    (``row_dofs``, ``row_coefs``); the dense ``C`` is built on demand.
    Unpaired rows have zero coefficients and ``g = +inf``.
    """

    slave_nodes: np.ndarray
    # master segment per slave node; -1 when unpaired or against a rigid body
    segments: np.ndarray
    xi: np.ndarray
    normals: np.ndarray
    g: np.ndarray
    # unsigned distance to the closest master point, always finite
    distance: np.ndarray
    weights: np.ndarray
    row_dofs: np.ndarray
    row_coefs: np.ndarray
    n_dofs: int

    @property
    def n_rows(self):
        return len(self.slave_nodes)

    @property
    def paired(self):
        return np.isfinite(self.g)

    @cached_property
    def C(self):
        C = np.zeros((self.n_rows, self.n_dofs))
        rows = np.repeat(np.arange(self.n_rows), self.row_dofs.shape[1])
        np.add.at(C, (rows, self.row_dofs.ravel()), self.row_coefs.ravel())
        return C

    def apply(self, u):
        """C @ u without forming C."""
        return np.einsum("mk,mk->m", self.row_coefs, u[self.row_dofs])

    def project(self, basis):
        """C @ basis without forming C."""
        return np.einsum("mk,mkr->mr", self.row_coefs, basis[self.row_dofs])

    def slack(self, u):
        """g - C u on paired rows, +inf elsewhere."""
        return self.g - self.apply(u)

    def same_pairing(self, other, rows=None, atol=0.0):
        """
        Whether ``other`` constrains the selected rows the same way.

        Rows match when both are unpaired, or both are paired with
        coefficients and gaps within ``atol``. Master segment ids are not
        compared: a slave on a shared vertex may switch segments without
        changing its row.
        """
        sel = slice(None) if rows is None else rows
        paired = self.paired[sel]
        if not np.array_equal(paired, other.paired[sel]):
            return False
        C, C_other = self.C[sel][paired], other.C[sel][paired]
        g, g_other = self.g[sel][paired], other.g[sel][paired]
        return np.allclose(C, C_other, rtol=0.0, atol=atol) and np.allclose(
            g, g_other, rtol=0.0, atol=atol
        )


@dataclass(eq=False)
class HFSolution:
    u: np.ndarray
    # one multiplier per slave node
    lam: np.ndarray
    active_set: np.ndarray
    iterations: int
    residuals: KKTResiduals = None
    contact: ContactSystem = None
    solve_time: float = 0.0
