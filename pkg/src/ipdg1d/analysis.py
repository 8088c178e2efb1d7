"""Discrete inf-sup constants, proof-construction checks and convergence rates.

Forms are passed as matrices with rows indexing test functions and columns
trial functions. The inf-sup constant of such a matrix with respect to Gram
matrices ``M_trial = L_t L_t^T`` and ``M_test = L_s L_s^T`` is the smallest
singular value of ``L_s^{-1} A L_t^{-T}``.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .dgspace import DgSpace
from .exceptions import NumericalRankError
from .forms import PenaltyParams, assemble_ip, coercivity_constant
from .mesh import uniform_mesh
from .reconstruct import C1Space, operator_matrices

MIN_DEGREE = 2


def _require_degree(k):
    if k < MIN_DEGREE:
        raise ValueError(f"inf-sup analysis requires polynomial degree k >= {MIN_DEGREE}, got k={k}")


def _dense(M):
    return M.toarray() if hasattr(M, "toarray") else np.asarray(M, dtype=float)


def _cholesky(M, label):
    M = _dense(M)
    try:
        return scipy.linalg.cholesky(0.5 * (M + M.T), lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalRankError(f"{label} Gram matrix is not positive definite") from exc


def whitened(A, M_trial, M_test):
    """``L_test^{-1} A L_trial^{-T}``."""
    A = _dense(A)
    Lt = _cholesky(M_trial, "trial")
    Ls = _cholesky(M_test, "test")
    B = scipy.linalg.solve_triangular(Ls, A, lower=True)
    return scipy.linalg.solve_triangular(Lt, B.T, lower=True).T


def infsup_constant(A, M_trial, M_test):
    """Return ``(gamma, sigma_max)`` of the whitened form.

    With more test than trial functions the supremum runs over the larger
    space, which is what the thin SVD gives.
    """
    s = scipy.linalg.svd(whitened(A, M_trial, M_test), compute_uv=False)
    return float(s.min()), float(s.max())


@dataclass(frozen=True, eq=False)
class WhSpace:
    """Orthonormal basis of V_h + S in the znorm, expressed in broken coordinates."""

    generators: np.ndarray  # columns: V_h basis then S basis, broken coordinates
    gram: np.ndarray  # Jacobi-scaled znorm Gram of the generators
    basis: np.ndarray  # columns orthonormal in the znorm
    eigenvalues: np.ndarray
    cutoff: float

    @property
    def dim(self):
        return self.basis.shape[1]

    @property
    def discarded(self):
        return self.eigenvalues[self.eigenvalues <= self.cutoff * self.eigenvalues.max()]


def build_wh_space(space, c1space=None, cutoff=1e-10, ops=None):
    """Reduce the (non-direct) sum V_h + S to an orthonormal basis."""
    if not 0.0 < cutoff < 1.0:
        raise ValueError(f"cutoff must lie in (0, 1), got {cutoff!r}")
    if ops is None:
        ops = operator_matrices(space, c1space)
    M0 = _dense(ops.forms_broken.M0)
    G = np.hstack([_dense(ops.P), _dense(ops.T)])
    gram = G.T @ M0 @ G
    d = 1.0 / np.sqrt(np.diag(gram))
    gram = d[:, None] * gram * d[None, :]
    w, U = np.linalg.eigh(gram)
    keep = w > cutoff * w.max()
    basis = (G * d) @ (U[:, keep] / np.sqrt(w[keep]))
    return WhSpace(G, gram, basis, w, cutoff)


def infsup_V(forms):
    """Inf-sup constant of ``A_h`` on V_h x V_h: trial in znorm, test in eenorm."""
    return infsup_constant(forms.A_primal, forms.M0, forms.M2)


def infsup_W(ops, wh=None):
    """Inf-sup constant with trial V_h in eenorm and test W(h) = V_h + S in znorm."""
    if wh is None:
        wh = build_wh_space(ops.space, ops.c1space, ops=ops)
    A = wh.basis.T @ (ops.A @ _dense(ops.P))
    M2 = ops.forms_broken.M2
    M2v = _dense(ops.P.T @ M2 @ ops.P)
    return infsup_constant(A, M2v, np.eye(wh.dim))


@dataclass
class InfSupReport:
    k: int
    sigma0: float
    sigma1: float
    n_elements: list = field(default_factory=list)
    h: list = field(default_factory=list)
    gamma_V: list = field(default_factory=list)
    gamma_W: list = field(default_factory=list)
    lambda_coercivity: list = field(default_factory=list)
    sigma_max: list = field(default_factory=list)
    trial_space: str = "V_h"
    test_space: str = "V_h | W(h)"
    norm_pairs: str = "V: znorm/eenorm; W: eenorm/znorm"

    def rows(self):
        return list(zip(self.n_elements, self.h, self.gamma_V, self.gamma_W, self.lambda_coercivity, self.sigma_max))


def infsup_sweep(meshes, k=2, params=None, domain=(0.0, 1.0), with_w=True):
    """Inf-sup and coercivity constants on a sequence of meshes (or element counts)."""
    _require_degree(k)
    if params is None:
        params = PenaltyParams.default(k)
    report = InfSupReport(k, params.sigma0, params.sigma1)
    for mesh in meshes:
        if not hasattr(mesh, "vertices"):
            mesh = uniform_mesh(int(mesh), domain)
        space = DgSpace(mesh, k)
        forms = assemble_ip(space, params)
        gamma_v, smax = infsup_V(forms)
        gamma_w = np.nan
        if with_w:
            gamma_w, _ = infsup_W(operator_matrices(space, C1Space(mesh, k), params))
        report.n_elements.append(mesh.n_elements)
        report.h.append(mesh.h_max)
        report.gamma_V.append(gamma_v)
        report.gamma_W.append(gamma_w)
        report.lambda_coercivity.append(coercivity_constant(forms))
        report.sigma_max.append(smax)
    return report


def random_coefficients(n, samples, seed):
    return np.random.default_rng(seed).standard_normal((n, samples))


def default_alpha(params):
    return 1.0 / max(params.sigma0**2, params.sigma1**2)


def proof_test_function(ops, coefficients, alpha=None):
    """Broken coordinates of ``w - R(w) - alpha h^2 w''`` (columns = samples)."""
    if alpha is None:
        alpha = default_alpha(ops.params)
    space = ops.space
    W = np.asarray(coefficients, dtype=float)
    h2 = np.repeat(space.mesh.element_sizes**2, space.dofs_per_element)
    lap = space.derivative_matrix(2) @ W
    h2 = h2.reshape((-1,) + (1,) * (W.ndim - 1))
    return ops.P @ W - ops.T @ ops.ritz(W) - alpha * (ops.P @ (h2 * lap))


def proof_construction_check(ops, coefficients, alpha=None):
    """Observed constants of the two steps behind the W(h) inf-sup bound.

    Returns ``(lower, upper)``: ``A_h(w, v) / (h_min^2 eenorm(w)^2)`` and
    ``||v||_{L2} / (h_max^2 eenorm(w))`` for the explicit test function
    ``v = w - R(w) - alpha h^2 w''``. Accepts one vector or sample columns.
    """
    _require_degree(ops.space.degree)
    W = np.asarray(coefficients, dtype=float)
    M2 = ops.P.T @ ops.forms_broken.M2 @ ops.P
    ee2 = np.einsum("i...,i...->...", W, M2 @ W)
    if np.any(ee2 <= 0):
        raise ValueError("w_h must be nonzero")
    V = proof_test_function(ops, W, alpha)
    form = np.einsum("i...,i...->...", V, ops.A @ (ops.P @ W))
    mesh = ops.space.mesh
    lower = form / (mesh.h_min**2 * ee2)
    # the broken basis is L2-orthonormal
    upper = np.linalg.norm(V, axis=0) / (mesh.h_max**2 * np.sqrt(ee2))
    return lower, upper


def proof_construction_constants(ops, alpha=None):
    """Sharp versions of :func:`proof_construction_check` over all of V_h.

    Returns ``(inf lower, sup upper)`` from generalised eigenproblems, i.e.
    the extreme values the random ensemble can only approach from inside.
    """
    _require_degree(ops.space.degree)
    n = ops.space.ndofs
    X = _dense(proof_test_function(ops, np.eye(n), alpha))
    M2 = _dense(ops.P.T @ ops.forms_broken.M2 @ ops.P)
    F = X.T @ _dense(ops.A @ ops.P)
    mesh = ops.space.mesh
    lower = scipy.linalg.eigh(0.5 * (F + F.T), M2, eigvals_only=True, subset_by_index=[0, 0])[0]
    upper = scipy.linalg.eigh(X.T @ X, M2, eigvals_only=True, subset_by_index=[n - 1, n - 1])[0]
    return float(lower / mesh.h_min**2), float(np.sqrt(max(upper, 0.0)) / mesh.h_max**2)


def ritz_projection(ops, s_dofs):
    """A_h-orthogonal projection of S functions onto V_h (coefficients, columns)."""
    A_v = _dense(ops.P.T @ ops.A @ ops.P)
    rhs = ops.P.T @ (ops.A @ (ops.T @ s_dofs))
    return scipy.linalg.solve(A_v, rhs, assume_a="sym")


def ritz_projection_stability(ops, s_dofs):
    """Largest ``||R w||_{L2} / ||w||_{L2}`` over the sample columns of ``s_dofs``."""
    S = np.asarray(s_dofs, dtype=float)
    if S.ndim == 1:
        S = S[:, None]
    proj = ritz_projection(ops, S)
    ratios = np.linalg.norm(proj, axis=0) / np.linalg.norm(ops.T @ S, axis=0)
    return float(ratios.max())


def _sup_ratio(L, R, rel_tol=1e-10):
    """``sqrt(max x^T L x / x^T R x)`` over x outside the nullspace of R."""
    w, U = np.linalg.eigh(0.5 * (R + R.T))
    keep = w > rel_tol * w.max()
    Z = U[:, keep] / np.sqrt(w[keep])
    return float(np.sqrt(max(np.linalg.eigvalsh(Z.T @ L @ Z).max(), 0.0)))


def reconstruction_constants(ops):
    """Sharp constants (suprema over all of V_h) of the reconstruction bounds.

    Same keys as :func:`ipdg1d.reconstruct.bound_ratios`, minus the
    interior-only averaging variant.
    """
    space, broken = ops.space, ops.broken
    n = space.ndofs
    eye = np.eye(n)
    P = _dense(ops.P)
    X_avg = _dense(ops.T @ ops.E) - P
    RU = _dense(ops.T) @ ops.ritz(eye)
    X = RU - P

    out = {"averaging": _sup_ratio(X_avg.T @ _dense(ops.forms_broken.M1) @ X_avg, _gram_of_functional(space, 1))}
    gram = 0
    for a in range(3):
        gram = gram + _dense(broken.element_matrices(a, a))
        out[f"ritz_{a}"] = _sup_ratio(X.T @ gram @ X, _gram_of_functional(space, a))
    M1v = _dense(P.T @ ops.forms_broken.M1 @ P)
    out["ritz_stability"] = _sup_ratio(RU.T @ _dense(broken.element_matrices(1, 1)) @ RU, M1v)
    return out


def _gram_of_functional(space, alpha):
    mesh = space.mesh
    he = mesh.node_sizes
    inner = mesh.interior_mask
    J = _dense(space.traces.jump)
    G = _dense(space.traces.grad_jump)
    wj = he ** (1.0 - 2 * alpha)
    wg = np.where(inner, he ** (3.0 - 2 * alpha), 0.0)
    return J.T @ (wj[:, None] * J) + G.T @ (wg[:, None] * G)


@dataclass(frozen=True)
class EocTable:
    h: tuple
    errors: tuple
    rates: tuple  # nan on the first row and wherever an error is not positive

    def rows(self):
        return list(zip(self.h, self.errors, self.rates))


def eoc(rows):
    """Experimental orders of convergence from ``(h, error)`` pairs."""
    h = np.array([r[0] for r in rows], dtype=float)
    e = np.array([r[1] for r in rows], dtype=float)
    if np.any(np.diff(h) >= 0):
        raise ValueError("mesh sizes must be strictly decreasing")
    rates = [np.nan]
    for i in range(1, len(h)):
        if e[i - 1] > 0 and e[i] > 0:
            rates.append(float(np.log(e[i - 1] / e[i]) / np.log(h[i - 1] / h[i])))
        else:
            rates.append(np.nan)
    return EocTable(tuple(h), tuple(e), tuple(rates))


def loglog_slope(h, values):
    """Least-squares slope of ``log(values)`` against ``log(h)``."""
    return float(np.polyfit(np.log(h), np.log(values), 1)[0])

