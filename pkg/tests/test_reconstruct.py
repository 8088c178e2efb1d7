import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ipdg1d.analysis import loglog_slope, reconstruction_constants
from ipdg1d.dgspace import DgFunction, DgSpace, project_l2
from ipdg1d.forms import PenaltyParams
from ipdg1d.mesh import perturbed_mesh, uniform_mesh
from ipdg1d.reconstruct import (
    C1Function,
    C1Space,
    averaging_matrix,
    averaging_reconstruct,
    bound_ratios,
    jump_functional,
    operator_matrices,
    orthogonality_residuals,
    ritz_reconstruct,
    ritz_rhs,
)


def bubble(k=2, n=2):
    """x(1 - x): C1, zero at both ends, and inside V_h for k >= 2."""
    space = DgSpace(uniform_mesh(n), k)
    return project_l2(lambda x: x * (1 - x), space)


class TestC1Space:
    @pytest.mark.parametrize("n, k, dim", [(2, 2, 6), (1, 2, 3), (4, 1, 8), (3, 3, 12)])
    def test_dimension(self, n, k, dim):
        c1 = C1Space(uniform_mesh(n), k)
        assert c1.dim == dim
        assert c1.to_broken.shape == (n * (k + 3), dim)

    def test_numbering_is_banded(self):
        c1 = C1Space(uniform_mesh(5), 3)
        value, deriv, interior = c1.numbering
        assert value[0] == value[-1] == -1
        used = np.concatenate([value[value >= 0], deriv, interior.ravel()])
        np.testing.assert_array_equal(np.sort(used), np.arange(c1.dim))
        span = np.ptp(np.where(c1.local_to_global >= 0, c1.local_to_global, np.nan), axis=1)
        assert np.nanmax(span) <= c1.k + 2

    def test_rejects_k0(self):
        with pytest.raises(ValueError):
            C1Space(uniform_mesh(2), 0)

    def test_nodal_basis_is_dual_to_dofs(self):
        c1 = C1Space(perturbed_mesh(3, jitter=0.3, seed=0), 3)
        e = 1
        x0, x1 = c1.mesh.vertices[e], c1.mesh.vertices[e + 1]
        vals = c1.local_basis(e, [x0, x1, *c1.interior_points(e)], 0)
        slopes = c1.local_basis(e, [x0, x1], 1)
        np.testing.assert_allclose(vals[[0, 1]][:, [0, 2]], np.eye(2), atol=1e-12)
        np.testing.assert_allclose(slopes[:, [1, 3]], np.eye(2), atol=1e-12)
        np.testing.assert_allclose(vals[2:, 4:], np.eye(c1.k - 1), atol=1e-12)

    @given(st.integers(1, 10), st.integers(1, 4), st.integers(0, 1000))
    @settings(max_examples=30, deadline=None)
    def test_members_are_c1_with_zero_ends(self, n, k, seed):
        c1 = C1Space(perturbed_mesh(n, jitter=0.3, seed=seed), k)
        s = C1Function(c1, np.random.default_rng(seed).standard_normal(c1.dim))
        v = c1.mesh.vertices
        scale = 1 + np.abs(s.dofs).max() / c1.mesh.h_min
        for r in (0, 1):
            np.testing.assert_allclose(s.evaluate(v[1:-1], r, "left"), s.evaluate(v[1:-1], r, "right"), atol=1e-11 * scale)
        np.testing.assert_allclose(s.evaluate(v[[0, -1]]), 0.0, atol=1e-12 * scale)

    def test_stiffness_is_spd(self):
        K = C1Space(uniform_mesh(6), 2).stiffness.toarray()
        np.testing.assert_allclose(K, K.T, atol=1e-10)
        assert np.linalg.eigvalsh(K).min() > 0

    def test_wrong_dof_count(self):
        with pytest.raises(ValueError):
            C1Function(C1Space(uniform_mesh(2), 2), np.zeros(3))


class TestAveraging:
    def test_reproduces_bubble(self):
        s = averaging_reconstruct(bubble())
        assert s.evaluate(0.3) == pytest.approx(0.21, abs=1e-12)
        assert s.evaluate(0.5, 1) == pytest.approx(0.0, abs=1e-12)
        x = np.linspace(0, 1, 17)
        np.testing.assert_allclose(s.evaluate(x), x * (1 - x), atol=1e-12)

    def test_matrix_form_gives_bubble_dofs(self):
        u = bubble()
        c1 = C1Space(u.space.mesh, 2)
        dofs = averaging_matrix(u.space, c1) @ u.coefficients
        value, deriv, interior = c1.numbering
        np.testing.assert_allclose(dofs[deriv], [1.0, 0.0, -1.0], atol=1e-12)
        assert dofs[value[1]] == pytest.approx(0.25)
        np.testing.assert_allclose(dofs[interior.ravel()], [0.1875, 0.1875], atol=1e-12)

    def test_indicator(self):
        space = DgSpace(uniform_mesh(2), 2)
        c = np.zeros(space.ndofs)
        c[0] = np.sqrt(0.5)
        c1 = C1Space(space.mesh, 2)
        dofs = averaging_matrix(space, c1) @ c
        value, deriv, interior = c1.numbering
        np.testing.assert_allclose(dofs[deriv], 0.0, atol=1e-12)
        assert dofs[value[1]] == pytest.approx(0.5)
        np.testing.assert_allclose(dofs[interior.ravel()], [1.0, 0.0], atol=1e-12)

    def test_mesh_mismatch(self):
        with pytest.raises(ValueError):
            averaging_matrix(DgSpace(uniform_mesh(2), 2), C1Space(uniform_mesh(2), 2))

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_output_is_c1(self, k):
        space = DgSpace(perturbed_mesh(6, jitter=0.3, seed=1), k)
        s = averaging_reconstruct(DgFunction(space, np.random.default_rng(k).standard_normal(space.ndofs)))
        v = space.mesh.vertices[1:-1]
        np.testing.assert_allclose(s.evaluate(v, 1, "left"), s.evaluate(v, 1, "right"), rtol=1e-10, atol=1e-9)


class TestRitz:
    def test_reproduces_bubble(self):
        s = ritz_reconstruct(bubble())
        x = np.linspace(0, 1, 17)
        np.testing.assert_allclose(s.evaluate(x), x * (1 - x), atol=1e-11)

    @pytest.mark.parametrize("k", [2, 3])
    def test_matrix_route_matches_pointwise_route(self, k):
        space = DgSpace(perturbed_mesh(7, jitter=0.3, seed=k), k)
        ops = operator_matrices(space)
        U = np.random.default_rng(0).standard_normal((space.ndofs, 20))
        for j in range(20):
            direct = ritz_reconstruct(DgFunction(space, U[:, j]), ops.c1space).dofs
            np.testing.assert_allclose(ops.ritz(U[:, j]), direct, rtol=1e-12, atol=1e-12 * np.abs(direct).max())

    def test_mixed_block_is_ritz_rhs(self):
        space = DgSpace(perturbed_mesh(5, jitter=0.3, seed=4), 2)
        ops = operator_matrices(space)
        u = np.random.default_rng(1).standard_normal(space.ndofs)
        np.testing.assert_allclose(ops.mixed @ u, ritz_rhs(DgFunction(space, u), ops.c1space), rtol=1e-11, atol=1e-11)

    def test_penalty_does_not_enter(self):
        space = DgSpace(uniform_mesh(5), 2)
        a = operator_matrices(space, params=PenaltyParams(40.0, 1.0)).mixed
        b = operator_matrices(space, params=PenaltyParams(500.0, 7.0)).mixed
        np.testing.assert_allclose(a.toarray(), b.toarray(), atol=1e-9)

    @given(st.integers(1, 12), st.sampled_from([1, 2, 3]), st.integers(0, 1000))
    @settings(max_examples=25, deadline=None)
    def test_orthogonality(self, n, k, seed):
        space = DgSpace(perturbed_mesh(n, jitter=0.3, seed=seed), k)
        ops = operator_matrices(space)
        U = np.random.default_rng(seed).standard_normal((space.ndofs, 10))
        assert np.abs(orthogonality_residuals(ops, U)).max() <= 1e-10

    def test_orthogonality_single_vector(self):
        ops = operator_matrices(DgSpace(uniform_mesh(4), 2))
        r = orthogonality_residuals(ops, np.ones(ops.space.ndofs))
        assert r.shape == (ops.c1space.dim,)

    def test_mismatched_operators(self):
        space = DgSpace(uniform_mesh(3), 2)
        with pytest.raises(ValueError):
            operator_matrices(space, C1Space(uniform_mesh(3), 2))
        with pytest.raises(ValueError):
            operator_matrices(space, C1Space(space.mesh, 3))


class TestBoundRatios:
    def test_jump_functional_of_indicator(self):
        space = DgSpace(uniform_mesh(2), 2)
        c = np.zeros(space.ndofs)
        c[0] = np.sqrt(0.5)
        # value jumps of 1 at nodes 0 and 1, h = 0.5, alpha = 1
        assert jump_functional(space, c, 1) == pytest.approx(4.0)
        assert jump_functional(space, c, 1, include_boundary=False) == pytest.approx(2.0)

    def test_sample_ratios_below_sharp_constants(self):
        ops = operator_matrices(DgSpace(uniform_mesh(8), 2))
        U = np.random.default_rng(0).standard_normal((ops.space.ndofs, 100))
        ratios = bound_ratios(ops, U)
        sharp = reconstruction_constants(ops)
        for key, value in sharp.items():
            assert ratios[key].max() <= value * (1 + 1e-8)

    def test_interior_variant_blows_up_without_interior_jumps(self):
        # x is continuous, so only the boundary jump at x = 1 controls E(u) - u
        ops = operator_matrices(DgSpace(uniform_mesh(2), 2))
        u = project_l2(lambda x: x, ops.space).coefficients
        ratios = bound_ratios(ops, u)
        assert np.isfinite(ratios["averaging"])
        assert ratios["averaging_interior"] > 1e6

    @pytest.mark.parametrize("k", [2, 3])
    def test_sharp_constants_do_not_drift(self, k):
        levels = [operator_matrices(DgSpace(uniform_mesh(n), k)) for n in (8, 16, 32, 64)]
        consts = [reconstruction_constants(ops) for ops in levels]
        h = [ops.space.mesh.h_max for ops in levels]
        for key in consts[0]:
            assert abs(loglog_slope(h, [c[key] for c in consts])) <= 0.2
