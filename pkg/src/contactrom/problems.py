"""Builders for the Hertz and ironing benchmarks."""
from .lib.errors import UsageError
from .meshes import half_disc, merge, rectangle
from .models.problem import DirichletCondition, ElasticProblem, SurfacePair

YOUNGS_MODULUS = 1.0
POISSON_RATIO = 0.3

HERTZ_RADIUS = 1.0
HERTZ_MAX_DISPLACEMENT = 0.3

SLAB_LENGTH = 5.0
IRON_DEPTH = 0.3
IRON_DEPTH_RANGE = (0.1, 0.3)

PROBLEM_KINDS = ("hertz", "ironing", "ironing2p", "rope")


def hertz_problem(n_arc=38, n_side=20):
    """
    Two unit half-discs touching at (0, 1): the lower one sits on its fixed
    flat edge, the upper one is pushed down by ``d`` on its flat edge. The
    upper arc is the slave surface.
    """
    R = HERTZ_RADIUS
    mesh = merge(
        lower=half_disc((0.0, 0.0), R, n_arc, n_side, facing="up"),
        upper=half_disc((0.0, 2.0 * R), R, n_arc, n_side, facing="down"),
    )
    fixed = mesh.surface_nodes("lower.flat")
    driven = mesh.surface_nodes("upper.flat")
    dirichlet = [
        DirichletCondition(fixed, 0, 0.0),
        DirichletCondition(fixed, 1, 0.0),
        DirichletCondition(driven, 0, 0.0),
        DirichletCondition(driven, 1, lambda mu: -mu[0]),
    ]
    return ElasticProblem(
        problem_id="hertz",
        mesh=mesh,
        youngs_modulus=(YOUNGS_MODULUS, YOUNGS_MODULUS),
        poisson_ratio=POISSON_RATIO,
        dirichlet=dirichlet,
        contact=SurfacePair(master="lower.arc", slave="upper.arc"),
        parameter_box=((0.0, HERTZ_MAX_DISPLACEMENT),),
        parameter_names=("d",),
    )


def ironing_problem(two_param=False, slab_nodes=(50, 10), iron_nodes=15):
    """
    A unit iron block pressed into an elastic slab and dragged along it.

    The iron starts centred over the slab's left edge, so ``d_x`` in
    ``[0, L]`` sweeps it over the full slab. With ``two_param`` the depth
    ``d_y`` is the second parameter, otherwise it is fixed.
    """
    L = SLAB_LENGTH
    nx, ny = slab_nodes
    mesh = merge(
        slab=rectangle(0.0, 0.0, L, 1.0, nx, ny),
        iron=rectangle(-0.5, 1.0, 1.0, 1.0, iron_nodes, iron_nodes),
    )
    fixed = mesh.surface_nodes("slab.bottom")
    driven = mesh.surface_nodes("iron.top")
    if two_param:
        depth = lambda mu: -mu[1]  # noqa: E731
        box = ((0.0, L), IRON_DEPTH_RANGE)
        names = ("d_x", "d_y")
    else:
        depth = -IRON_DEPTH
        box = ((0.0, L),)
        names = ("d_x",)
    dirichlet = [
        DirichletCondition(fixed, 0, 0.0),
        DirichletCondition(fixed, 1, 0.0),
        DirichletCondition(driven, 0, lambda mu: mu[0]),
        DirichletCondition(driven, 1, depth),
    ]
    return ElasticProblem(
        problem_id="ironing2p" if two_param else "ironing",
        mesh=mesh,
        youngs_modulus=(YOUNGS_MODULUS, YOUNGS_MODULUS),
        poisson_ratio=POISSON_RATIO,
        dirichlet=dirichlet,
        contact=SurfacePair(master="iron.bottom", slave="slab.top"),
        parameter_box=box,
        parameter_names=names,
    )


def build_problem(kind, **options):
    kind = str(kind).lower()
    if kind == "hertz":
        return hertz_problem(**options)
    if kind == "ironing":
        return ironing_problem(two_param=False, **options)
    if kind == "ironing2p":
        return ironing_problem(two_param=True, **options)
    if kind == "rope":
        from .convexhull import rope_problem

        return rope_problem(**options)
    raise UsageError(
        f"Unknown problem '{kind}', expected one of {', '.join(PROBLEM_KINDS)}"
    )
