"""Model problems: smooth manufactured solutions and point sources.

A point source ``c0 * delta + c1 * delta'`` at ``xbar`` enters the discrete
problem through the averaging reconstruction of the test function,
``c0 * E(v)(xbar) - c1 * E(v)'(xbar)``, which is well defined because E(v)
is C1.
"""

from dataclasses import dataclass
import time

import numpy as np

from ._banded import BandedCholesky
from .dgspace import BrokenFunction, DgFunction, DgSpace, broken_integral, project_l2
from .exceptions import CoercivityError, SkeletonCollisionError
from .forms import PenaltyParams, assemble_ip, load_vector_smooth, norms_of
from .mesh import Mesh1D, uniform_mesh
from .reconstruct import C1Space, averaging_matrix

SKELETON_TOLERANCE = 1e-12


class ExactSolution(BrokenFunction):
    """Piecewise analytic function with breakpoints strictly inside the domain.

    ``pieces[i]`` is a tuple ``(u, u', u'')`` of vectorised callables valid
    between breakpoint ``i - 1`` and breakpoint ``i``.
    """

    def __init__(self, pieces, breakpoints=()):
        if len(pieces) != len(breakpoints) + 1:
            raise ValueError("need one piece more than breakpoints")
        self.pieces = [tuple(p) for p in pieces]
        self.breakpoints = tuple(float(b) for b in breakpoints)

    def evaluate(self, x, derivative=0, side=None):
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        where = "left" if side == "left" else "right"
        idx = np.searchsorted(self.breakpoints, x, side=where)
        out = np.empty_like(x)
        for i, piece in enumerate(self.pieces):
            sel = idx == i
            if np.any(sel):
                out[sel] = np.broadcast_to(piece[derivative](x[sel]), x[sel].shape)
        return float(out[0]) if scalar else out


@dataclass(frozen=True)
class ProblemSpec:
    """Either a smooth problem ``-u'' = f`` or a point source ``c0 delta + c1 delta'``."""

    kind: str  # "smooth" | "point_source"
    domain: tuple = (0.0, 1.0)
    source: object = None  # smooth: callable f
    solution: object = None  # smooth: ExactSolution
    xbar: float = None
    c0: float = 0.0
    c1: float = 0.0
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("smooth", "point_source"):
            raise ValueError(f"unknown problem kind {self.kind!r}")
        a, b = self.domain
        if self.kind == "point_source" and not a < self.xbar < b:
            raise ValueError(f"xbar={self.xbar!r} must lie inside ({a}, {b})")


def sine_problem(domain=(0.0, 1.0)):
    """``u = sin(pi (x - a) / L)`` with matching source; vanishes at both ends."""
    a, b = domain
    w = np.pi / (b - a)
    u = ExactSolution(
        [
            (
                lambda x: np.sin(w * (x - a)),
                lambda x: w * np.cos(w * (x - a)),
                lambda x: -(w**2) * np.sin(w * (x - a)),
            )
        ]
    )
    return ProblemSpec("smooth", domain, source=lambda x: w**2 * np.sin(w * (x - a)), solution=u, name="smooth")


def point_source_problem(xbar=0.6366, c0=0.0, c1=1.0, domain=(0.0, 1.0)):
    name = {(1.0, 0.0): "delta", (0.0, 1.0): "delta-prime"}.get((float(c0), float(c1)), "point-source")
    return ProblemSpec("point_source", tuple(domain), xbar=float(xbar), c0=float(c0), c1=float(c1), name=name)


def exact_solution(spec):
    """Closed-form solution; point sources use the Green's function of ``-d^2/dx^2``.

    On ``[a, b]`` with ``L = b - a`` the delta part is ``G(x, xbar)`` and the
    delta' part is ``-dG/dy (x, xbar)``: ``(x - a)/L`` left of ``xbar`` and
    ``(x - b)/L`` right of it, a unit downward jump.
    """
    if spec.kind == "smooth":
        return spec.solution
    a, b = spec.domain
    L = b - a
    y, c0, c1 = spec.xbar, spec.c0, spec.c1

    def zero(x):
        return np.zeros_like(x)

    left = (
        lambda x: c0 * (x - a) * (b - y) / L + c1 * (x - a) / L,
        lambda x: np.full_like(x, c0 * (b - y) / L + c1 / L),
        zero,
    )
    right = (
        lambda x: c0 * (y - a) * (b - x) / L + c1 * (x - b) / L,
        lambda x: np.full_like(x, -c0 * (y - a) / L + c1 / L),
        zero,
    )
    return ExactSolution([left, right], [y])


def check_off_skeleton(mesh, xbar):
    loc = mesh.locate(xbar)
    a, b = mesh.domain
    if loc.vertex_distance <= SKELETON_TOLERANCE * (b - a):
        raise SkeletonCollisionError(xbar, loc.nearest_vertex, loc.vertex_distance)
    return loc


def point_source_load(space, c1space, xbar, c0=0.0, c1=1.0):
    """Entries ``c0 E(phi_i)(xbar) - c1 E(phi_i)'(xbar)``."""
    loc = check_off_skeleton(space.mesh, xbar)
    e = loc.element
    l2g = c1space.local_to_global[e]
    keep = l2g >= 0
    functional = np.zeros(c1space.dim)
    values = c1space.local_basis(e, [xbar], 0)[0]
    slopes = c1space.local_basis(e, [xbar], 1)[0]
    functional[l2g[keep]] = c0 * values[keep] - c1 * slopes[keep]
    return averaging_matrix(space, c1space).T @ functional


def load_vector(spec, space):
    if spec.kind == "smooth":
        return load_vector_smooth(spec.source, space)
    return point_source_load(space, C1Space(space.mesh, space.degree), spec.xbar, spec.c0, spec.c1)


def solve(spec, mesh, k=2, params=None, forms=None):
    """Solve the interior penalty system; returns ``(u_h, seconds)``.

    A failed Cholesky factorisation means the form is not positive definite,
    i.e. the penalty is too small, and is reported as :class:`CoercivityError`.
    """
    if params is None:
        params = PenaltyParams.default(k)
    if spec.kind == "point_source":
        check_off_skeleton(mesh, spec.xbar)
        if k < 1:
            raise ValueError("point sources need k >= 1 for the C1 reconstruction")
    space = DgSpace(mesh, k)
    start = time.perf_counter()
    if forms is None:
        forms = assemble_ip(space, params)
    b = load_vector(spec, space)
    try:
        factor = BandedCholesky(forms.A_primal, 2 * (k + 1) - 1)
    except np.linalg.LinAlgError:
        raise CoercivityError(params.sigma0) from None
    u = factor.solve(b)
    return DgFunction(space, u), time.perf_counter() - start


@dataclass(frozen=True)
class ErrorRecord:
    n_elements: int
    h_min: float
    h_max: float
    dofs: int
    err_znorm: float
    err_enorm: float
    err_eenorm: float
    err_l2: float
    err_combined: float
    solve_seconds: float


def measure_errors(u_h, exact, solve_seconds=float("nan")):
    """All error norms of ``exact - u_h`` with cells cut at the exact breakpoints."""
    space = u_h.space
    mesh = space.mesh
    err = exact - u_h
    bps = exact.breakpoints
    z, e, ee, _ = norms_of(err, space, bps)
    scaled_e = norms_of(err, space, bps, scale_power=1).enorm
    scaled_ee = norms_of(err, space, bps, scale_power=2).eenorm
    l2 = np.sqrt(broken_integral(err, mesh, 0, m=space.degree + 6, breakpoints=bps))
    return ErrorRecord(
        n_elements=mesh.n_elements,
        h_min=mesh.h_min,
        h_max=mesh.h_max,
        dofs=space.ndofs,
        err_znorm=z,
        err_enorm=e,
        err_eenorm=ee,
        err_l2=float(l2),
        err_combined=z + scaled_e + scaled_ee,
        solve_seconds=solve_seconds,
    )


def convergence_study(spec, meshes, k=2, params=None):
    """Solve on each mesh and measure errors; meshes may be element counts."""
    records = []
    for mesh in meshes:
        if not isinstance(mesh, Mesh1D):
            mesh = uniform_mesh(int(mesh), spec.domain)
        u_h, seconds = solve(spec, mesh, k, params)
        records.append(measure_errors(u_h, exact_solution(spec), seconds))
    return records


def best_approximation_quantity(exact, space):
    """``||u - w||_{L2} + (sum h^3 [w']^2)^{1/2} + (sum h [w]^2)^{1/2}`` for w = L2 projection of u.

    Gradient jumps run over interior nodes, value jumps over interior nodes too.
    """
    w = project_l2(exact, space, quadrature_boost=5)
    mesh = space.mesh
    he = mesh.node_sizes
    inner = mesh.interior_mask
    tr = space.traces
    jump = tr.jump @ w.coefficients
    gjump = tr.grad_jump @ w.coefficients
    l2 = np.sqrt(broken_integral(exact - w, mesh, 0, m=space.degree + 6, breakpoints=exact.breakpoints))
    return float(l2 + np.sqrt(np.sum(he[inner] ** 3 * gjump[inner] ** 2)) + np.sqrt(np.sum(he[inner] * jump[inner] ** 2)))
