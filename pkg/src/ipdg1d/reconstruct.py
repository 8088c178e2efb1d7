"""C1-conforming reconstructions of broken polynomials.

The target space S consists of C1 piecewise polynomials of degree ``k + 2``
vanishing at both ends of the domain. Its local degrees of freedom are the
value and derivative at each element end plus values at ``k - 1`` equally
spaced interior points. Global DOFs are ordered vertex by vertex, each
vertex followed by the interior points of the element to its right, which
keeps the stiffness matrix banded.

Every member of S is also a broken polynomial of degree ``k + 2``; the
sparse matrix :attr:`C1Space.to_broken` gives that representation, and all
mixed forms between V_h and S are evaluated in the common broken space.
"""

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
import scipy.sparse as sp

from ._banded import BandedCholesky
from .dgspace import BrokenFunction, DgFunction, DgSpace, gauss_rule, reference_basis
from .forms import PenaltyParams, assemble_ip, assemble_norm_grams
from .mesh import Mesh1D


@lru_cache(maxsize=None)
def _reference_dof_inverse(k):
    """Inverse of the local DOF matrix on ``[-1, 1]`` w.r.t. ``sqrt(2j+1) P_j``."""
    p = k + 2
    t_int = -1.0 + 2.0 * np.arange(1, k) / k
    rows = [
        reference_basis(p, [-1.0], 0)[0],
        reference_basis(p, [-1.0], 1)[0],
        reference_basis(p, [1.0], 0)[0],
        reference_basis(p, [1.0], 1)[0],
    ]
    if k > 1:
        rows.extend(reference_basis(p, t_int, 0))
    D = np.array(rows)
    return np.linalg.inv(D)


@dataclass(frozen=True, eq=False)
class C1Space:
    """C1 piecewise polynomials of degree ``k + 2`` with zero boundary values."""

    mesh: Mesh1D
    k: int

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"reconstruction needs k >= 1, got {self.k!r}")

    @property
    def degree(self):
        return self.k + 2

    @cached_property
    def broken(self):
        return DgSpace(self.mesh, self.degree)

    @cached_property
    def numbering(self):
        """``(value_dof, deriv_dof, interior_dof)``; pinned boundary values are -1."""
        N, k = self.mesh.n_elements, self.k
        value = -np.ones(N + 1, dtype=int)
        deriv = np.empty(N + 1, dtype=int)
        interior = np.empty((N, k - 1), dtype=int)
        c = 0
        for i in range(N + 1):
            if 0 < i < N:
                value[i] = c
                c += 1
            deriv[i] = c
            c += 1
            if i < N:
                interior[i] = np.arange(c, c + k - 1)
                c += k - 1
        return value, deriv, interior

    @property
    def dim(self):
        N = self.mesh.n_elements
        return 2 * (N - 1) + 2 + (self.k - 1) * N

    @cached_property
    def local_to_global(self):
        value, deriv, interior = self.numbering
        e = np.arange(self.mesh.n_elements)
        return np.column_stack([value[e], deriv[e], value[e + 1], deriv[e + 1], interior])

    def interior_points(self, e):
        x0, x1 = self.mesh.vertices[e], self.mesh.vertices[e + 1]
        return x0 + (x1 - x0) * np.arange(1, self.k) / self.k

    def local_coefficients(self, e):
        """Broken-basis coefficients of the local nodal basis on element ``e``."""
        h = self.mesh.element_sizes[e]
        scale = np.ones(self.k + 3)
        scale[[1, 3]] = h / 2.0  # physical derivative DOF -> reference derivative
        return np.sqrt(h) * _reference_dof_inverse(self.k) * scale

    def local_basis(self, e, x, derivative=0):
        """Nodal basis values on element ``e``, shape ``(len(x), k + 3)``."""
        return self.broken.basis(e, np.atleast_1d(x), derivative) @ self.local_coefficients(e)

    @cached_property
    def to_broken(self):
        nb = self.degree + 1
        rows, cols, vals = [], [], []
        for e in range(self.mesh.n_elements):
            C = self.local_coefficients(e)
            for l, g in enumerate(self.local_to_global[e]):
                if g < 0:
                    continue
                rows.extend(range(e * nb, (e + 1) * nb))
                cols.extend([g] * nb)
                vals.extend(C[:, l])
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.broken.ndofs, self.dim))

    @cached_property
    def stiffness(self):
        """``int s' t'`` over S; SPD because boundary values are pinned."""
        T = self.to_broken
        return (T.T @ self.broken.element_matrices(1, 1) @ T).tocsr()

    @cached_property
    def stiffness_factor(self):
        return BandedCholesky(self.stiffness, self.k + 2)

    def function(self, dofs=None):
        return C1Function(self, np.zeros(self.dim) if dofs is None else dofs)


@dataclass(frozen=True, eq=False)
class C1Function(BrokenFunction):
    space: C1Space
    dofs: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.dofs, dtype=float)
        if d.shape != (self.space.dim,):
            raise ValueError(f"expected {self.space.dim} DOFs, got shape {d.shape}")
        object.__setattr__(self, "dofs", d)

    @property
    def breakpoints(self):
        return ()

    def as_broken(self):
        return DgFunction(self.space.broken, self.space.to_broken @ self.dofs)

    def evaluate(self, x, derivative=0, side=None):
        return self.as_broken().evaluate(x, derivative, side)


def c1_evaluate(s, x, derivative=0, side=None):
    return s.evaluate(x, derivative, side)


def averaging_matrix(space, c1space):
    """Sparse matrix of the averaging reconstruction, shape ``(dim S, dim V_h)``."""
    if space.mesh is not c1space.mesh:
        raise ValueError("DG space and C1 space must share one mesh")
    tr = space.traces
    value, deriv, interior = c1space.numbering
    E = sp.lil_matrix((c1space.dim, space.ndofs))
    for i in range(space.mesh.n_nodes):
        if value[i] >= 0:
            E[value[i]] = tr.average[i]
        E[deriv[i]] = tr.grad_average[i]
    for e in range(space.mesh.n_elements):
        if c1space.k > 1:
            block = space.basis(e, c1space.interior_points(e))
            for m, g in enumerate(interior[e]):
                E[g, space.element_dofs(e)] = block[m]
    return E.tocsr()


def averaging_reconstruct(u_h, c1space=None):
    """Average one-sided values and derivatives at vertices; copy interior values."""
    space = u_h.space
    if c1space is None:
        c1space = C1Space(space.mesh, space.degree)
    return C1Function(c1space, averaging_matrix(space, c1space) @ u_h.coefficients)


def ritz_rhs(u_h, c1space):
    """``int u_h' v' - sum_nodes [u_h] v'(node)`` for every nodal basis function v of S."""
    mesh = c1space.mesh
    l2g = c1space.local_to_global
    rhs = np.zeros(c1space.dim)
    rule = gauss_rule(c1space.degree + 2)
    for e in range(mesh.n_elements):
        x0, h = mesh.vertices[e], mesh.element_sizes[e]
        x = x0 + h * rule.points
        contrib = c1space.local_basis(e, x, 1).T @ (h * rule.weights * u_h.evaluate(x, 1))
        keep = l2g[e] >= 0
        rhs[l2g[e][keep]] += contrib[keep]
    for i in range(mesh.n_nodes):
        e = i - 1 if i > 0 else 0
        slopes = c1space.local_basis(e, [mesh.vertices[i]], 1)[0]
        keep = l2g[e] >= 0
        rhs[l2g[e][keep]] -= u_h.trace_data(i).jump * slopes[keep]
    return rhs


def ritz_reconstruct(u_h, c1space=None):
    """Conforming Ritz reconstruction: the stiffness solve with jump-corrected data."""
    space = u_h.space
    if c1space is None:
        c1space = C1Space(space.mesh, space.degree)
    return C1Function(c1space, c1space.stiffness_factor.solve(ritz_rhs(u_h, c1space)))


@dataclass(frozen=True, eq=False)
class OperatorMatrices:
    """Linear maps between V_h, S and their common broken space.

    ``P`` embeds V_h and ``T`` embeds S in the broken space of degree
    ``k + 2``; ``A`` is the interior penalty form on that broken space,
    so ``A_h(w, v) = (Y v)^T A (X w)`` for any embeddings X, Y.
    """

    space: DgSpace
    c1space: C1Space
    params: PenaltyParams
    E: sp.csr_matrix
    P: sp.csr_matrix
    T: sp.csr_matrix
    A: sp.csr_matrix
    mixed: sp.csr_matrix  # rows: S test functions; A_h(w_h, v) for w_h in V_h

    @property
    def broken(self):
        return self.c1space.broken

    def ritz(self, coefficients):
        """DOFs of the Ritz reconstruction of one (or many, column-wise) V_h vectors."""
        return self.c1space.stiffness_factor.solve(self.mixed @ coefficients)

    @cached_property
    def forms_broken(self):
        return assemble_ip(self.broken, self.params)

    @cached_property
    def laplace_pairing(self):
        """``G[l, j] = int psi_l'' phi_j`` with psi in S and phi in the broken space."""
        return (self.T.T @ self.broken.element_matrices(2, 0)).tocsr()


def operator_matrices(space, c1space=None, params=None):
    if c1space is None:
        c1space = C1Space(space.mesh, space.degree)
    if space.mesh is not c1space.mesh:
        raise ValueError("DG space and C1 space must share one mesh")
    if c1space.k != space.degree:
        raise ValueError("C1 space degree does not match the DG space")
    if params is None:
        params = PenaltyParams.default(space.degree)
    broken = c1space.broken
    P = space.embedding(broken)
    T = c1space.to_broken
    A = assemble_ip(broken, params).A_primal
    return OperatorMatrices(
        space=space,
        c1space=c1space,
        params=params,
        E=averaging_matrix(space, c1space),
        P=P,
        T=T,
        A=A,
        mixed=(T.T @ A @ P).tocsr(),
    )


def orthogonality_residuals(ops, coefficients):
    """``int (u_h - R u_h) v''`` for every basis function v of S, normalised.

    Each entry is divided by ``||u_h||_{L2} * ||v''||_{L2}``. With sample
    columns in ``coefficients`` the result has one column per sample.
    """
    u = np.asarray(coefficients, dtype=float)
    diff = ops.P @ u - ops.T @ ops.ritz(u)
    raw = ops.laplace_pairing @ diff
    K2 = ops.T.T @ ops.broken.element_matrices(2, 2) @ ops.T
    vnorm = np.sqrt(K2.diagonal())
    if u.ndim == 1:
        return raw / (np.linalg.norm(u) * vnorm)
    return raw / (vnorm[:, None] * np.linalg.norm(u, axis=0)[None, :])


def _quad(M, X):
    """Column-wise quadratic forms ``x^T M x``."""
    return np.einsum("i...,i...->...", X, M @ X)


def jump_functional(space, coefficients, alpha=1, include_boundary=True):
    """``sum_E h^{3-2a} [u']^2 + sum h^{1-2a} [u]^2``.

    Gradient jumps run over interior nodes; value jumps over all nodes unless
    ``include_boundary`` is false. ``coefficients`` may hold samples as columns.
    """
    mesh = space.mesh
    he = mesh.node_sizes
    tr = space.traces
    inner = mesh.interior_mask
    value_nodes = np.ones_like(inner) if include_boundary else inner
    wj = np.where(value_nodes, he ** (1.0 - 2 * alpha), 0.0)
    wg = np.where(inner, he ** (3.0 - 2 * alpha), 0.0)
    jump = tr.jump @ coefficients
    gjump = tr.grad_jump @ coefficients
    return np.einsum("i,i...->...", wj, jump**2) + np.einsum("i,i...->...", wg, gjump**2)


def bound_ratios(ops, coefficients):
    """Observed constants of the reconstruction bounds.

    ``coefficients`` is one V_h vector or a matrix with samples as columns.
    Keys: ``"averaging"`` (energy-norm error of the averaging reconstruction
    against the all-node jump functional), ``"averaging_interior"`` (same
    against interior jumps only, infinite when those vanish), ``"ritz_0"``,
    ``"ritz_1"``, ``"ritz_2"`` (broken H^a error of the Ritz reconstruction)
    and ``"ritz_stability"`` (``||(R u)'|| / enorm(u)``). All values are
    norm ratios, i.e. square roots of the squared-quantity ratios.
    """
    U = np.asarray(coefficients, dtype=float)
    space, broken = ops.space, ops.broken
    d_avg = ops.T @ (ops.E @ U) - ops.P @ U
    lhs_avg = _quad(ops.forms_broken.M1, d_avg)
    rhs_int = jump_functional(space, U, 1, include_boundary=False)
    out = {
        "averaging": np.sqrt(lhs_avg / jump_functional(space, U, 1)),
        "averaging_interior": np.sqrt(np.divide(lhs_avg, rhs_int, out=np.full_like(lhs_avg, np.inf), where=rhs_int > 0)),
    }
    RU = ops.T @ ops.ritz(U)
    D = RU - ops.P @ U
    gram = 0
    for a in range(3):
        gram = gram + broken.element_matrices(a, a)
        out[f"ritz_{a}"] = np.sqrt(_quad(gram, D) / jump_functional(space, U, a))
    M1 = assemble_norm_grams(space)[1]
    out["ritz_stability"] = np.sqrt(_quad(broken.element_matrices(1, 1), RU) / _quad(M1, U))
    return out
