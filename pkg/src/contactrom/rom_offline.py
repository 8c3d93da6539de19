"""
Offline stage: training designs, snapshot generation, the reduced model and
its on-disk format.

A model directory holds ``manifest.json`` plus one raw block per matrix
(``U.bin``, ``Lam.bin``, ``phi.bin``, ``Kr.bin``, ``Kfc.bin``, ``free.bin``).
"""
import itertools
import json
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .contact import HF_TOL, HFConvergenceError, solve_hf
from .densela import truncated_svd
from .fem import assemble_stiffness, dirichlet_dofs
from .lib.benchit import benchit
from .lib.blocks import read_block, sha256_of, write_block
from .lib.errors import NumericalFailure, UsageError
from .lib.logger import debug, log, progress
from .models.basis import TruncatedBasis
from .models.design import Scheme, TrainingDesign
from .models.reduced import ReducedModel
from .models.snapshots import SnapshotSet
from .version import __version__

MODEL_FORMAT = 1
MANIFEST = "manifest.json"

# midpoint validation resolution for uniform training designs
VALIDATION_POINTS = 120


class SnapshotGenerationError(NumericalFailure):
    def __init__(self, message, mu=None):
        super().__init__(message)
        self.mu = mu


class ModelFormatError(UsageError):
    pass


class ModelMismatchError(UsageError):
    pass


def _box(parameter_box):
    box = tuple((float(lo), float(hi)) for lo, hi in parameter_box)
    for lo, hi in box:
        if not hi > lo:
            raise UsageError(f"empty parameter range [{lo}, {hi}]")
    return box


def _grid(axes):
    """Cartesian product, first axis outermost."""
    return np.array(list(itertools.product(*axes)), dtype=float).reshape(
        -1, len(axes)
    )


def uniform_design(parameter_box, n):
    """``n`` points per axis at lo + (hi - lo) k / n, k = 1..n."""
    if n < 1:
        raise UsageError(f"uniform design needs n >= 1, got {n}")
    box = _box(parameter_box)
    k = np.arange(1, n + 1)
    axes = [lo + (hi - lo) * (k / n) for lo, hi in box]
    return TrainingDesign(box, Scheme.UNIFORM, n, _grid(axes))


def nested_design(parameter_box, level):
    """2^level + 1 points per axis including both box ends."""
    if level < 0:
        raise UsageError(f"nested design needs level >= 0, got {level}")
    box = _box(parameter_box)
    j = np.arange(2**level + 1)
    axes = [lo + (hi - lo) * (j / 2**level) for lo, hi in box]
    return TrainingDesign(box, Scheme.NESTED, level, _grid(axes))


def midpoints_design(parameter_box, n):
    """Midpoints between consecutive points of ``uniform_design(n)``."""
    if n < 2:
        raise UsageError(f"midpoint design needs n >= 2, got {n}")
    box = _box(parameter_box)
    k = np.arange(1, n) + 0.5
    axes = [lo + (hi - lo) * (k / n) for lo, hi in box]
    return TrainingDesign(box, Scheme.MIDPOINTS, n, _grid(axes))


def complement_design(parameter_box, level):
    """
    Points of ``nested_design(level + 1)`` with an odd index on every axis,
    so none of them belongs to any nested level up to ``level``.
    """
    if level < 0:
        raise UsageError(f"complement design needs level >= 0, got {level}")
    box = _box(parameter_box)
    j = np.arange(1, 2 ** (level + 1), 2)
    axes = [lo + (hi - lo) * (j / 2 ** (level + 1)) for lo, hi in box]
    return TrainingDesign(box, Scheme.COMPLEMENT, level, _grid(axes))


def explicit_design(parameter_box, points):
    box = _box(parameter_box)
    points = np.asarray(points, dtype=float).reshape(-1, len(box))
    order = np.lexsort(points.T[::-1])
    return TrainingDesign(box, Scheme.EXPLICIT, len(points), points[order])


_BUILDERS = {
    Scheme.UNIFORM: uniform_design,
    Scheme.NESTED: nested_design,
    Scheme.MIDPOINTS: midpoints_design,
    Scheme.COMPLEMENT: complement_design,
}


def parse_design(text, parameter_box):
    """
    Design from ``"<scheme>:<size>"`` (``uniform:12``, ``nested:4``,
    ``midpoints:120``, ``complement:7``) or from a list of points.
    """
    if isinstance(text, TrainingDesign):
        return text
    if not isinstance(text, str):
        return explicit_design(parameter_box, text)
    name, _, size = text.strip().partition(":")
    try:
        scheme = Scheme[name.upper()]
        builder = _BUILDERS[scheme]
        size = int(size)
    except (KeyError, ValueError):
        raise UsageError(
            f"bad design '{text}', expected e.g. 'uniform:12' or 'nested:4'"
        ) from None
    return builder(parameter_box, size)


def validation_design(design, size=None):
    """
    Held-out points for a training design: midpoints of ``uniform(120)`` for
    uniform training, the next nested level's new points for nested training.
    """
    if design.scheme == Scheme.UNIFORM:
        return midpoints_design(design.parameter_box, size or VALIDATION_POINTS)
    if design.scheme == Scheme.NESTED:
        level = design.size if size is None else size
        return complement_design(design.parameter_box, level)
    raise UsageError(f"no default validation set for a {design.scheme} design")


def default_workers():
    env = os.environ.get("CONTACTROM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"CONTACTROM_THREADS={env!r} is not a number")
    return 1


def generate_snapshots(problem, design, hf_tol=HF_TOL, workers=None):
    """
    One high-fidelity solve per design point. Columns follow the design
    order whatever the number of workers; the first failing point aborts
    the sweep.
    """
    if len(design) == 0:
        raise UsageError("cannot generate snapshots over an empty design")
    if tuple(design.parameter_box) != tuple(problem.parameter_box):
        raise UsageError(
            f"design box {design.parameter_box} does not match "
            f"{problem.problem_id} box {problem.parameter_box}"
        )
    workers = workers or default_workers()
    # shared caches are filled once before the threads start
    assemble_stiffness(problem)
    dirichlet_dofs(problem)

    total = len(design)
    counter = itertools.count(1)
    what = f"OFFLINE: {problem.problem_id} snapshots"

    def run(mu):
        try:
            sol = solve_hf(problem, mu, tol=hf_tol)
        except HFConvergenceError as e:
            raise SnapshotGenerationError(
                f"snapshot at mu={mu.tolist()} failed: {e}", mu
            ) from e
        progress(next(counter), total, what)
        return sol

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            solutions = list(pool.map(run, design.points))
    else:
        solutions = [run(mu) for mu in design.points]

    return SnapshotSet(
        design=design,
        U=np.column_stack([s.u for s in solutions]),
        Lam=np.column_stack([s.lam for s in solutions]),
        solve_times=np.array([s.solve_time for s in solutions]),
        problem_id=problem.problem_id,
        residuals=np.array([tuple(s.residuals) for s in solutions]),
    )


@benchit
def build_reduced_model(snaps, delta, problem, tau=None):
    """
    Truncate the displacement snapshots (free dofs only) to a primal basis
    and keep the contact snapshots raw as the dual dictionary.
    """
    if len(snaps) == 0:
        raise UsageError("cannot build a model from zero snapshots")
    if snaps.problem_id != problem.problem_id:
        raise ModelMismatchError(
            f"snapshots of '{snaps.problem_id}' given with problem "
            f"'{problem.problem_id}'"
        )
    constrained, _, free = dirichlet_dofs(problem)
    phi = truncated_svd(snaps.U[free], delta)
    K = assemble_stiffness(problem)
    V = phi.vectors
    Kr = V.T @ K[np.ix_(free, free)] @ V
    Kr = 0.5 * (Kr + Kr.T)
    Kfc = V.T @ K[np.ix_(free, constrained)]
    log(
        f"OFFLINE: {problem.problem_id} rank {phi.rank} from {len(snaps)} "
        f"snapshots (delta={delta:g}), dictionary {snaps.Lam.shape[1]} columns"
    )
    return ReducedModel(
        problem_id=problem.problem_id,
        design=snaps.design,
        phi=phi,
        dual_dict=snaps.Lam.copy(),
        primal_dict=snaps.U.copy(),
        Kr=Kr,
        Kfc=Kfc,
        free_dofs=free,
        constrained_dofs=constrained,
        delta=float(delta),
        tau=float(delta if tau is None else tau),
        stiffness_parametric=problem.is_stiffness_parametric,
    )


def save_model(model, path):
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format": MODEL_FORMAT,
        "version": __version__,
        "problem_id": model.problem_id,
        "design": model.design.to_dict(),
        "delta": model.delta,
        "tau": model.tau,
        "stiffness_parametric": model.stiffness_parametric,
        "singular_values": model.phi.singular_values.tolist(),
        "spectrum": (
            None if model.phi.spectrum is None else model.phi.spectrum.tolist()
        ),
        "column_norms": model.column_norms.tolist(),
        "blocks": {
            "U": write_block(path, "U.bin", model.primal_dict),
            "Lam": write_block(path, "Lam.bin", model.dual_dict),
            "phi": write_block(path, "phi.bin", model.phi.vectors),
            "Kr": write_block(path, "Kr.bin", model.Kr),
            "Kfc": write_block(path, "Kfc.bin", model.Kfc),
            "free": write_block(path, "free.bin", model.free_dofs, kind="i8"),
        },
    }
    (path / MANIFEST).write_text(json.dumps(manifest, indent=1))
    debug(f"MODEL: saved {model.problem_id} to {path}")
    return path


def load_model(path):
    path = Path(path)
    try:
        manifest = json.loads((path / MANIFEST).read_text())
    except FileNotFoundError:
        raise UsageError(f"no model at {path}") from None
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"unreadable manifest in {path}: {e}") from None
    if manifest.get("format") != MODEL_FORMAT:
        raise ModelFormatError(
            f"model format {manifest.get('format')} in {path}, "
            f"this version reads {MODEL_FORMAT}"
        )
    blocks = manifest["blocks"]
    U = read_block(path, blocks["U"])
    free = read_block(path, blocks["free"], vector=True)
    spectrum = manifest.get("spectrum")
    if spectrum is not None:
        spectrum = np.asarray(spectrum, dtype=float)
    phi = TruncatedBasis(
        vectors=read_block(path, blocks["phi"]),
        singular_values=np.asarray(manifest["singular_values"], dtype=float),
        delta=float(manifest["delta"]),
        spectrum=spectrum,
    )
    return ReducedModel(
        problem_id=manifest["problem_id"],
        design=TrainingDesign.from_dict(manifest["design"]),
        phi=phi,
        dual_dict=read_block(path, blocks["Lam"]),
        primal_dict=U,
        Kr=read_block(path, blocks["Kr"]),
        Kfc=read_block(path, blocks["Kfc"]),
        free_dofs=free,
        constrained_dofs=np.setdiff1d(np.arange(U.shape[0]), free),
        delta=float(manifest["delta"]),
        tau=float(manifest["tau"]),
        stiffness_parametric=bool(manifest.get("stiffness_parametric", False)),
    )


def manifest_hash(path):
    return sha256_of(Path(path) / MANIFEST)


def check_model(model, problem):
    """Refuse a model built for another problem or another mesh."""
    if model.problem_id != problem.problem_id:
        raise ModelMismatchError(
            f"model was built for '{model.problem_id}', "
            f"query is for '{problem.problem_id}'"
        )
    if model.primal_dict.shape[0] != problem.mesh.n_dofs:
        raise ModelMismatchError(
            f"model has {model.primal_dict.shape[0]} dofs, mesh has "
            f"{problem.mesh.n_dofs}"
        )
