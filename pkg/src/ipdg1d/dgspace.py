"""Broken polynomial spaces on 1D meshes.

Each element carries the Legendre polynomials scaled to be orthonormal in
L2 of that element, so element mass matrices are identities. Degrees of
freedom are numbered element by element: dof ``e * (k + 1) + j`` is the
coefficient of the degree-``j`` polynomial on element ``e``.
"""

from dataclasses import dataclass
from functools import cached_property, lru_cache
import warnings

import numpy as np
from numpy.polynomial import legendre
import scipy.sparse as sp

from .mesh import Mesh1D


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre rule on the reference interval ``[0, 1]``."""

    points: np.ndarray
    weights: np.ndarray
    degree: int  # polynomial exactness

    def integrate(self, f):
        return float(np.dot(self.weights, f(self.points)))


@lru_cache(maxsize=None)
def gauss_rule(m):
    if int(m) != m or m < 1:
        raise ValueError(f"number of quadrature points must be >= 1, got {m!r}")
    t, w = legendre.leggauss(int(m))
    points = 0.5 * (t + 1.0)
    weights = 0.5 * w
    points.flags.writeable = False
    weights.flags.writeable = False
    return QuadratureRule(points, weights, 2 * int(m) - 1)


@lru_cache(maxsize=None)
def _derivative_coefficients(p, r):
    # column j: Legendre-series coefficients of d^r/dt^r [sqrt(2j+1) P_j]
    out = np.zeros((p + 1, p + 1))
    for j in range(p + 1):
        c = np.zeros(j + 1)
        c[j] = np.sqrt(2 * j + 1)
        if r:
            c = legendre.legder(c, r)
        out[: c.size, j] = c
    return out


def reference_basis(p, t, r=0):
    """Values of ``d^r/dt^r sqrt(2j+1) P_j(t)``, shape ``(len(t), p + 1)``.

    ``t`` lives on ``[-1, 1]``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return legendre.legvander(t, p) @ _derivative_coefficients(p, r)


def split_cells(a, b, breakpoints):
    """Sub-intervals of ``[a, b]`` cut at the breakpoints strictly inside it."""
    cuts = [x for x in breakpoints if a < x < b]
    edges = [a, *sorted(cuts), b]
    return list(zip(edges[:-1], edges[1:]))


class BrokenFunction:
    """A function that is smooth on each element up to declared breakpoints.

    Subclasses implement ``evaluate(x, derivative=0, side=None)``; ``side``
    picks the one-sided limit (``"left"`` or ``"right"``) where the function
    is discontinuous.
    """

    breakpoints = ()

    def evaluate(self, x, derivative=0, side=None):
        raise NotImplementedError

    def __call__(self, x, derivative=0, side=None):
        return self.evaluate(x, derivative, side)

    def __sub__(self, other):
        return LinearCombination([(1.0, self), (-1.0, other)])

    def __add__(self, other):
        return LinearCombination([(1.0, self), (1.0, other)])

    def __rmul__(self, scalar):
        return LinearCombination([(float(scalar), self)])

    def __neg__(self):
        return LinearCombination([(-1.0, self)])


class LinearCombination(BrokenFunction):
    def __init__(self, terms):
        self.terms = list(terms)
        bps = set()
        for _, f in self.terms:
            bps.update(getattr(f, "breakpoints", ()))
        self.breakpoints = tuple(sorted(bps))

    def evaluate(self, x, derivative=0, side=None):
        out = 0.0
        for c, f in self.terms:
            out = out + c * np.asarray(f.evaluate(x, derivative, side), dtype=float)
        return out


class SmoothFunction(BrokenFunction):
    """Wrap callables for a function and its derivatives."""

    def __init__(self, *derivatives, breakpoints=()):
        self.derivatives = derivatives
        self.breakpoints = tuple(breakpoints)

    def evaluate(self, x, derivative=0, side=None):
        if derivative >= len(self.derivatives):
            raise ValueError(f"derivative {derivative} not supplied")
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.derivatives[derivative](x), x.shape).astype(float)


@dataclass(frozen=True, eq=False)
class TraceData:
    """One-sided traces at a node plus the jump and average operators.

    At a boundary node the missing side is ``None``.
    """

    node: int
    value_left: float | None
    value_right: float | None
    deriv_left: float | None
    deriv_right: float | None
    jump: float
    average: float
    grad_jump: float
    grad_average: float


@dataclass(frozen=True, eq=False)
class TraceOperators:
    """Sparse node-by-dof matrices realising jumps and averages.

    Rows are nodes. The interior jump is ``left - right`` and, with the
    missing side set to zero, the same formula gives ``v * n`` on the
    boundary. Averages are half sums inside and one-sided on the boundary.
    """

    left: tuple  # left[r]: r-th derivative from the element left of each node
    right: tuple
    jump: sp.csr_matrix
    average: sp.csr_matrix
    grad_jump: sp.csr_matrix
    grad_average: sp.csr_matrix


@dataclass(frozen=True, eq=False)
class DgSpace:
    """Discontinuous piecewise polynomials of degree ``degree`` on ``mesh``."""

    mesh: Mesh1D
    degree: int

    def __post_init__(self):
        if int(self.degree) != self.degree or self.degree < 0:
            raise ValueError(f"degree must be a non-negative integer, got {self.degree!r}")

    @property
    def dofs_per_element(self):
        return self.degree + 1

    @property
    def ndofs(self):
        return self.mesh.n_elements * self.dofs_per_element

    def element_dofs(self, e):
        n = self.dofs_per_element
        return slice(e * n, (e + 1) * n)

    def to_reference(self, e, x):
        x0, x1 = self.mesh.vertices[e], self.mesh.vertices[e + 1]
        return (2.0 * np.asarray(x, dtype=float) - (x0 + x1)) / (x1 - x0)

    def basis(self, e, x, derivative=0):
        """Physical basis values on element ``e``, shape ``(len(x), k + 1)``."""
        h = self.mesh.element_sizes[e]
        scale = h ** -0.5 * (2.0 / h) ** derivative
        return scale * reference_basis(self.degree, self.to_reference(e, x), derivative)

    def function(self, coefficients=None):
        if coefficients is None:
            coefficients = np.zeros(self.ndofs)
        return DgFunction(self, coefficients)

    def element_matrices(self, r, s, quadrature=None):
        """Block-diagonal matrix of ``int_K phi_i^(r) phi_j^(s)`` (sparse)."""
        p = self.degree
        rule = quadrature or gauss_rule(p + 3)
        t = 2.0 * rule.points - 1.0
        Br = reference_basis(p, t, r)
        Bs = reference_basis(p, t, s)
        # int_{-1}^{1} dt = 2 int_0^1 ds
        ref = 2.0 * (Br * rule.weights[:, None]).T @ Bs
        if r == s:
            ref = 0.5 * (ref + ref.T)
        h = self.mesh.element_sizes
        scale = 0.5 * (2.0 / h) ** (r + s)
        return sp.block_diag([c * ref for c in scale], format="csr")

    @cached_property
    def traces(self):
        p, mesh = self.degree, self.mesh
        n_el, n_nodes, nb = mesh.n_elements, mesh.n_nodes, p + 1
        h = mesh.element_sizes
        left, right = [], []
        for r in range(3):
            at_right_end = reference_basis(p, [1.0], r)[0]  # value at t = +1
            at_left_end = reference_basis(p, [-1.0], r)[0]
            rows, cols, vals = [], [], []
            for e in range(n_el):
                rows.extend([e + 1] * nb)
                cols.extend(range(e * nb, (e + 1) * nb))
                vals.extend(h[e] ** -0.5 * (2.0 / h[e]) ** r * at_right_end)
            left.append(sp.csr_matrix((vals, (rows, cols)), shape=(n_nodes, self.ndofs)))
            rows, cols, vals = [], [], []
            for e in range(n_el):
                rows.extend([e] * nb)
                cols.extend(range(e * nb, (e + 1) * nb))
                vals.extend(h[e] ** -0.5 * (2.0 / h[e]) ** r * at_left_end)
            right.append(sp.csr_matrix((vals, (rows, cols)), shape=(n_nodes, self.ndofs)))
        weight = np.where(mesh.interior_mask, 0.5, 1.0)
        W = sp.diags(weight)
        return TraceOperators(
            left=tuple(left),
            right=tuple(right),
            jump=(left[0] - right[0]).tocsr(),
            average=(W @ (left[0] + right[0])).tocsr(),
            grad_jump=(left[1] - right[1]).tocsr(),
            grad_average=(W @ (left[1] + right[1])).tocsr(),
        )

    def embedding(self, target):
        """Sparse inclusion of this space into a higher degree space on the same mesh."""
        if target.mesh is not self.mesh:
            raise ValueError("spaces live on different meshes")
        if target.degree < self.degree:
            raise ValueError("target space has lower degree")
        nb, nt = self.dofs_per_element, target.dofs_per_element
        rows = (np.arange(self.mesh.n_elements)[:, None] * nt + np.arange(nb)).ravel()
        cols = np.arange(self.ndofs)
        return sp.csr_matrix((np.ones(self.ndofs), (rows, cols)), shape=(target.ndofs, self.ndofs))

    def derivative_matrix(self, r):
        """Coefficients of the broken ``r``-th derivative, in this same space."""
        p = self.degree
        h = self.mesh.element_sizes
        # exact: the derivative of a degree-p Legendre series is another Legendre series
        D = _derivative_coefficients(p, r)
        # the orthonormal basis uses sqrt(2j+1) P_j; rescale rows accordingly
        norm = np.sqrt(2 * np.arange(p + 1) + 1)
        ref = D / norm[:, None]
        return sp.block_diag([(2.0 / he) ** r * ref for he in h], format="csr")

    def cell_rule(self, e, m, breakpoints=()):
        """Physical quadrature points/weights on element ``e`` split at breakpoints."""
        rule = gauss_rule(m)
        x0, x1 = self.mesh.vertices[e], self.mesh.vertices[e + 1]
        pts, wts = [], []
        for a, b in split_cells(x0, x1, breakpoints):
            pts.append(a + (b - a) * rule.points)
            wts.append((b - a) * rule.weights)
        return np.concatenate(pts), np.concatenate(wts)


@dataclass(frozen=True, eq=False)
class DgFunction(BrokenFunction):
    space: DgSpace
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        if c.shape != (self.space.ndofs,):
            raise ValueError(f"expected {self.space.ndofs} coefficients, got shape {c.shape}")
        object.__setattr__(self, "coefficients", c)

    @property
    def breakpoints(self):
        return ()

    def local(self, e):
        return self.coefficients[self.space.element_dofs(e)]

    def evaluate(self, x, derivative=0, side=None):
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        mesh = self.space.mesh
        a, b = mesh.domain
        if np.any((x < a) | (x > b)):
            raise ValueError("evaluation point outside the mesh domain")
        elems = mesh.element_index(x, side)
        x0 = mesh.vertices[elems]
        h = mesh.element_sizes[elems]
        t = (2.0 * (x - x0) - h) / h
        values = reference_basis(self.space.degree, t, derivative)
        coeffs = self.coefficients.reshape(mesh.n_elements, -1)[elems]
        out = h**-0.5 * (2.0 / h) ** derivative * np.einsum("ij,ij->i", values, coeffs)
        return float(out[0]) if scalar else out

    def trace_data(self, node):
        mesh = self.space.mesh
        if not 0 <= node < mesh.n_nodes:
            raise ValueError(f"node {node} out of range")
        x = mesh.vertices[node]
        last = mesh.n_nodes - 1
        vl = dl = vr = dr = None
        if node > 0:
            vl = self.evaluate(x, 0, "left")
            dl = self.evaluate(x, 1, "left")
        if node < last:
            vr = self.evaluate(x, 0, "right")
            dr = self.evaluate(x, 1, "right")
        if node == 0:
            jump, avg, gjump, gavg = -vr, vr, -dr, dr
        elif node == last:
            jump, avg, gjump, gavg = vl, vl, dl, dl
        else:
            jump, avg = vl - vr, 0.5 * (vl + vr)
            gjump, gavg = dl - dr, 0.5 * (dl + dr)
        return TraceData(node, vl, vr, dl, dr, jump, avg, gjump, gavg)

    def _combine(self, other, sign):
        if isinstance(other, DgFunction) and other.space is self.space:
            return DgFunction(self.space, self.coefficients + sign * other.coefficients)
        return LinearCombination([(1.0, self), (sign, other)])

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __rmul__(self, scalar):
        return DgFunction(self.space, float(scalar) * self.coefficients)

    def __neg__(self):
        return DgFunction(self.space, -self.coefficients)


def evaluate(f, x, side=None, derivative=0):
    """Evaluate a broken function; ``side`` resolves one-sided limits at vertices."""
    return f.evaluate(x, derivative, side)


def trace_data(f, node):
    return f.trace_data(node)


def _as_broken(g, breakpoints):
    if isinstance(g, BrokenFunction):
        return g, tuple(sorted(set(breakpoints) | set(g.breakpoints)))
    return SmoothFunction(g), tuple(sorted(breakpoints))


def moments(g, space, quadrature_boost=3, breakpoints=()):
    """Element-wise ``int_K g phi_j`` for every basis function."""
    g, bps = _as_broken(g, breakpoints)
    mesh = space.mesh
    x, w, owner = mesh_rule(mesh, space.degree + 1 + quadrature_boost, bps)
    h = mesh.element_sizes[owner]
    t = (2.0 * (x - mesh.vertices[owner]) - h) / h
    weighted = (w * h**-0.5 * np.asarray(g.evaluate(x), dtype=float))[:, None]
    out = np.zeros((mesh.n_elements, space.dofs_per_element))
    np.add.at(out, owner, reference_basis(space.degree, t) * weighted)
    return out.ravel()


def project_l2(g, space, quadrature_boost=3, breakpoints=()):
    """Element-wise L2 projection (the basis is orthonormal, so moments are coefficients)."""
    return DgFunction(space, moments(g, space, quadrature_boost, breakpoints))


def mesh_rule(mesh, m, breakpoints=()):
    """Composite Gauss rule over the whole mesh, cells cut at breakpoints.

    Returns points, weights and the owning element of every point.
    """
    rule = gauss_rule(m)
    v = mesh.vertices
    bps = np.asarray(sorted(b for b in breakpoints if v[0] < b < v[-1]), dtype=float)
    edges = np.union1d(v, bps)
    a, b = edges[:-1], edges[1:]
    x = (a[:, None] + (b - a)[:, None] * rule.points).ravel()
    w = ((b - a)[:, None] * rule.weights).ravel()
    owner = np.repeat(mesh.element_index(0.5 * (a + b)), m)
    return x, w, owner


def broken_integral(f, mesh, derivative=0, m=8, breakpoints=(), power=2):
    """``sum_K int_K |f^(r)|^power`` with cut-cell Gauss quadrature."""
    f, bps = _as_broken(f, breakpoints)
    x, w, _ = mesh_rule(mesh, m, bps)
    return float(np.dot(w, np.abs(f.evaluate(x, derivative)) ** power))


def smoothness_warning(message):
    warnings.warn(message, RuntimeWarning, stacklevel=3)
