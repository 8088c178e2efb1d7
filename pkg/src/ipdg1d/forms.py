"""Interior penalty bilinear form, mesh-dependent norms and load vectors.

Faces are points in 1D, so every face integral is a sum over nodes. Node
terms use the local size ``h_e`` from :attr:`Mesh1D.node_sizes`.

Matrix convention: ``A[i, j] = A_h(phi_j, phi_i)``; rows index test functions.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
import scipy.io
import scipy.linalg
import scipy.sparse as sp

from .dgspace import DgFunction, DgSpace, _as_broken, gauss_rule, mesh_rule, moments, smoothness_warning
from .exceptions import CoercivityError


@dataclass(frozen=True)
class PenaltyParams:
    sigma0: float
    sigma1: float = 1.0

    def __post_init__(self):
        if not self.sigma0 > 0:
            raise ValueError(f"sigma0 must be positive, got {self.sigma0!r}")
        if not self.sigma1 >= 0:
            raise ValueError(f"sigma1 must be non-negative, got {self.sigma1!r}")

    @classmethod
    def default(cls, k):
        return cls(sigma0=10.0 * k**2, sigma1=1.0)


@dataclass(frozen=True, eq=False)
class AssembledForms:
    space: DgSpace
    params: PenaltyParams
    A_primal: sp.csr_matrix
    A_ibp: sp.csr_matrix
    M0: sp.csr_matrix  # mesh-dependent L2 norm
    M1: sp.csr_matrix  # mesh-dependent energy norm
    M2: sp.csr_matrix  # mesh-dependent H2 norm

    @property
    def quadrature(self):
        return gauss_rule(self.space.degree + 3)

    def apply(self, u, v):
        """``A_h(u, v)`` for coefficient vectors."""
        return float(np.asarray(v) @ (self.A_primal @ np.asarray(u)))


class NormTriple(NamedTuple):
    znorm: float
    enorm: float
    eenorm: float
    suspect: bool = False  # quadrature disagreed: undeclared kink or jump


def _node_diag(values):
    return sp.diags(np.asarray(values, dtype=float))


def assemble_ip(space, params=None):
    """Assemble the stabilised SIPG matrix along two algebraically equal routes.

    The primal route uses ``int u' v'`` plus the symmetric consistency terms;
    the second route integrates by parts once more, trading the element
    stiffness for ``-int u'' v`` and interior terms ``[u'] {v}``.
    """
    if params is None:
        params = PenaltyParams.default(space.degree)
    mesh = space.mesh
    he = mesh.node_sizes
    interior = mesh.interior_mask.astype(float)
    tr = space.traces

    penalty = tr.jump.T @ _node_diag(params.sigma0 / he) @ tr.jump
    penalty = penalty + tr.grad_jump.T @ _node_diag(params.sigma1 * he * interior) @ tr.grad_jump

    # A[i, j] = A_h(phi_j, phi_i): -[phi_j]{phi_i'} - [phi_i]{phi_j'}
    consistency = tr.grad_average.T @ tr.jump + tr.jump.T @ tr.grad_average
    A_primal = space.element_matrices(1, 1) - consistency + penalty

    # int -phi_j'' phi_i, + [phi_j']{phi_i} on interior nodes, - [phi_j]{phi_i'} everywhere
    laplace = space.element_matrices(0, 2)
    A_ibp = (
        -laplace
        + tr.average.T @ _node_diag(interior) @ tr.grad_jump
        - tr.grad_average.T @ tr.jump
        + penalty
    )
    M0, M1, M2 = assemble_norm_grams(space)
    return AssembledForms(space, params, A_primal.tocsr(), A_ibp.tocsr(), M0, M1, M2)


def assemble_norm_grams(space):
    """Gram matrices ``(M0, M1, M2)`` of the mesh-dependent L2, H1 and H2 norms."""
    mesh = space.mesh
    he = mesh.node_sizes
    interior = mesh.interior_mask.astype(float)
    tr = space.traces
    J, GA, GJ = tr.jump, tr.grad_average, tr.grad_jump

    M0 = space.element_matrices(0, 0) + GA.T @ _node_diag(he**3) @ GA + J.T @ _node_diag(he) @ J
    M1 = space.element_matrices(1, 1) + J.T @ _node_diag(1.0 / he) @ J
    M2 = (
        space.element_matrices(2, 2)
        + GJ.T @ _node_diag(interior / he) @ GJ
        + J.T @ _node_diag(he**-3.0) @ J
    )
    return M0.tocsr(), M1.tocsr(), M2.tocsr()


def _volume_terms(f, mesh, bps, m, power=0):
    """Broken integrals of ``(h^power f^(r))^2`` for r = 0, 1, 2."""
    x, w, owner = mesh_rule(mesh, m, bps)
    w = w * mesh.element_sizes[owner] ** (2 * power)
    return np.array([np.dot(w, np.asarray(f.evaluate(x, r), dtype=float) ** 2) for r in range(3)])


def _bisected(mesh, bps):
    """Breakpoints that additionally halve every quadrature sub-cell."""
    edges = np.union1d(mesh.vertices, [b for b in bps if mesh.vertices[0] < b < mesh.vertices[-1]])
    return tuple(np.union1d(edges[1:-1], 0.5 * (edges[:-1] + edges[1:])))


def _node_traces(f, mesh):
    """Jumps and averages of f and f' at every node, with boundary conventions."""
    v = mesh.vertices
    last = mesh.n_nodes - 1
    vl = np.zeros(mesh.n_nodes)
    vr = np.zeros(mesh.n_nodes)
    dl = np.zeros(mesh.n_nodes)
    dr = np.zeros(mesh.n_nodes)
    vl[1:] = f.evaluate(v[1:], 0, "left")
    dl[1:] = f.evaluate(v[1:], 1, "left")
    vr[:last] = f.evaluate(v[:last], 0, "right")
    dr[:last] = f.evaluate(v[:last], 1, "right")
    weight = np.where(mesh.interior_mask, 0.5, 1.0)
    return vl - vr, dl - dr, weight * (dl + dr)


def norms_of(f, space, breakpoints=(), m=None, scale_power=0):
    """Evaluate the three mesh-dependent norms of a broken function.

    ``breakpoints`` inside elements split the quadrature cells. Each element
    integral is also recomputed on bisected cells; disagreement beyond
    ``1e-8`` (relative, on the norms) marks the result ``suspect`` and issues a warning.

    ``scale_power`` multiplies ``f`` by ``h**scale_power`` with ``h`` the
    element size in volume terms and the node size in node terms.
    """
    mesh = space.mesh
    if isinstance(f, DgFunction) and not breakpoints and scale_power == 0 and f.space is space:
        M0, M1, M2 = assemble_norm_grams(space)
        c = f.coefficients
        return NormTriple(*(float(np.sqrt(max(c @ (M @ c), 0.0))) for M in (M0, M1, M2)))
    f, bps = _as_broken(f, breakpoints)
    if m is None:
        m = space.degree + 6
    he = mesh.node_sizes
    interior = mesh.interior_mask

    vol = _volume_terms(f, mesh, bps, m, scale_power)
    fine = _volume_terms(f, mesh, _bisected(mesh, bps), m, scale_power)
    # compare norms, not squares; the floor absorbs cancellation roundoff in f
    r0, r1 = np.sqrt(np.abs(vol)), np.sqrt(np.abs(fine))
    suspect = bool(np.any(np.abs(r0 - r1) > 1e-8 * r1 + 1e-13))
    if suspect:
        smoothness_warning("norm quadrature disagrees under cell bisection; undeclared breakpoint?")

    jump, gjump, gavg = _node_traces(f, mesh)
    s = he**scale_power
    jump, gjump, gavg = s * jump, s * gjump, s * gavg
    z2 = vol[0] + np.sum(he**3 * gavg**2) + np.sum(he * jump**2)
    e2 = vol[1] + np.sum(jump**2 / he)
    ee2 = vol[2] + np.sum(gjump[interior] ** 2 / he[interior]) + np.sum(jump**2 / he**3)
    return NormTriple(float(np.sqrt(z2)), float(np.sqrt(e2)), float(np.sqrt(ee2)), suspect)


def combined_error(f, space, breakpoints=()):
    """``znorm(f) + enorm(h f) + eenorm(h^2 f)``, the quantity in the a priori bound."""
    z = norms_of(f, space, breakpoints).znorm
    e = norms_of(f, space, breakpoints, scale_power=1).enorm
    ee = norms_of(f, space, breakpoints, scale_power=2).eenorm
    return z + e + ee


def load_vector_smooth(fsrc, space, quadrature_boost=4, breakpoints=()):
    """Entries ``int fsrc phi_i``."""
    return moments(fsrc, space, quadrature_boost, breakpoints)


def coercivity_constant(forms):
    """Smallest eigenvalue of the pencil ``(sym(A), M1)``."""
    A = forms.A_primal.toarray()
    A = 0.5 * (A + A.T)
    M1 = forms.M1.toarray()
    return float(scipy.linalg.eigh(A, M1, eigvals_only=True, subset_by_index=[0, 0])[0])


def check_coercivity(forms):
    """Return ``lambda_min``; raise :class:`CoercivityError` when it is not positive."""
    lam = coercivity_constant(forms)
    if lam <= 0:
        raise CoercivityError(forms.params.sigma0, lam)
    return lam


def export_matrix_market(forms, directory):
    """Write A_primal, A_ibp, M0, M1, M2 as MatrixMarket coordinate files."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in ("A_primal", "A_ibp", "M0", "M1", "M2"):
        path = directory / f"{name}.mtx"
        scipy.io.mmwrite(str(path), sp.coo_matrix(getattr(forms, name)), precision=17)
        paths.append(path)
    return paths
