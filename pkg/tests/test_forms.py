import numpy as np
import pytest
import scipy.io
from hypothesis import given, settings, strategies as st

from ipdg1d.analysis import infsup_constant
from ipdg1d.dgspace import DgFunction, DgSpace, SmoothFunction, project_l2
from ipdg1d.exceptions import CoercivityError
from ipdg1d.forms import (
    PenaltyParams,
    assemble_ip,
    check_coercivity,
    coercivity_constant,
    combined_error,
    export_matrix_market,
    load_vector_smooth,
    norms_of,
)
from ipdg1d.mesh import perturbed_mesh, uniform_mesh
from ipdg1d.reconstruct import C1Space

PARAMS = PenaltyParams(40.0, 1.0)


def linear_on_unit(k=2):
    space = DgSpace(uniform_mesh(1), k)
    return space, project_l2(lambda x: x, space)


class TestPenaltyParams:
    def test_default(self):
        assert PenaltyParams.default(2) == PenaltyParams(40.0, 1.0)
        assert PenaltyParams.default(3).sigma0 == 90.0

    @pytest.mark.parametrize("s0, s1", [(0.0, 1.0), (-1.0, 1.0), (1.0, -0.5)])
    def test_rejects(self, s0, s1):
        with pytest.raises(ValueError):
            PenaltyParams(s0, s1)


class TestHandOracles:
    def test_linear_single_element(self):
        space, u = linear_on_unit()
        forms = assemble_ip(space, PARAMS)
        assert forms.apply(u.coefficients, u.coefficients) == pytest.approx(39.0, rel=1e-12)

    def test_indicator_two_elements(self):
        space = DgSpace(uniform_mesh(2), 2)
        c = np.zeros(space.ndofs)
        c[0] = np.sqrt(0.5)
        assert assemble_ip(space, PARAMS).apply(c, c) == pytest.approx(160.0, rel=1e-12)

    def test_norms_of_linear(self):
        space, u = linear_on_unit()
        z, e, ee, suspect = norms_of(u, space)
        assert z == pytest.approx(np.sqrt(10 / 3), rel=1e-12)
        assert e == pytest.approx(np.sqrt(2.0), rel=1e-12)
        assert ee == pytest.approx(1.0, rel=1e-12)
        assert not suspect

    def test_norms_of_linear_by_quadrature(self):
        space, _ = linear_on_unit()
        f = SmoothFunction(lambda x: x, lambda x: np.ones_like(x), lambda x: np.zeros_like(x))
        np.testing.assert_allclose(norms_of(f, space)[:3], [np.sqrt(10 / 3), np.sqrt(2.0), 1.0], rtol=1e-12)

    def test_norms_of_zero(self):
        space = DgSpace(uniform_mesh(3), 2)
        assert norms_of(space.function(), space)[:3] == (0.0, 0.0, 0.0)

    def test_load_of_zero(self):
        space = DgSpace(uniform_mesh(3), 2)
        np.testing.assert_array_equal(load_vector_smooth(lambda x: 0 * x, space), 0.0)


class TestAssembly:
    @given(st.integers(1, 12), st.integers(0, 4), st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_symmetric(self, n, k, seed):
        A = assemble_ip(DgSpace(perturbed_mesh(n, jitter=0.3, seed=seed), k), PARAMS).A_primal
        assert abs(A - A.T).max() <= 1e-12 * abs(A).max()

    @given(st.integers(1, 12), st.sampled_from([2, 3]), st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_dual_assembly_identity(self, n, k, seed):
        space = DgSpace(perturbed_mesh(n, jitter=0.4, seed=seed), k)
        forms = assemble_ip(space, PenaltyParams(10 * k**2, 1.0))
        rng = np.random.default_rng(seed)
        U = rng.standard_normal((space.ndofs, 5))
        V = rng.standard_normal((space.ndofs, 5))
        gap = np.abs(V.T @ (forms.A_primal - forms.A_ibp) @ U)
        scale = np.outer(np.linalg.norm(V, axis=0), np.linalg.norm(U, axis=0)) * abs(forms.A_primal).max()
        assert np.all(gap <= 1e-10 * scale)

    @pytest.mark.parametrize("k", [2, 3])
    def test_consistent_on_c1_functions(self, k):
        # for s in S (C1, zero boundary values) A_h(s, v) = int -s'' v
        c1 = C1Space(perturbed_mesh(6, jitter=0.3, seed=1), k)
        broken = c1.broken
        s = c1.to_broken @ np.random.default_rng(2).standard_normal(c1.dim)
        forms = assemble_ip(broken, PenaltyParams.default(k))
        laplace = -(broken.element_matrices(0, 2) @ s)
        residual = forms.A_primal @ s - laplace
        assert np.abs(residual).max() <= 1e-10 * np.abs(laplace).max()

    def test_grams_symmetric_positive(self):
        forms = assemble_ip(DgSpace(perturbed_mesh(7, jitter=0.3, seed=0), 2))
        for M in (forms.M0, forms.M1, forms.M2):
            D = M.toarray()
            np.testing.assert_allclose(D, D.T, atol=1e-10 * np.abs(D).max())
            assert np.linalg.eigvalsh(D).min() > 0

    def test_gram_route_matches_quadrature_route(self):
        space = DgSpace(perturbed_mesh(5, jitter=0.3, seed=9), 3)
        f = DgFunction(space, np.random.default_rng(3).standard_normal(space.ndofs))
        gram = norms_of(f, space)
        quad = norms_of(f, space, breakpoints=(0.123,))
        np.testing.assert_allclose(gram[:3], quad[:3], rtol=1e-11)

    def test_quadrature_property(self):
        assert assemble_ip(DgSpace(uniform_mesh(2), 2)).quadrature.degree >= 4

    def test_export(self, tmp_path):
        forms = assemble_ip(DgSpace(uniform_mesh(3), 2))
        paths = export_matrix_market(forms, tmp_path / "mats")
        assert [p.name for p in paths] == ["A_primal.mtx", "A_ibp.mtx", "M0.mtx", "M1.mtx", "M2.mtx"]
        back = scipy.io.mmread(str(paths[0])).toarray()
        np.testing.assert_allclose(back, forms.A_primal.toarray(), rtol=1e-15)


class TestNorms:
    def test_undeclared_jump_is_flagged(self):
        space = DgSpace(uniform_mesh(4), 2)
        step = SmoothFunction(
            lambda x: np.where(x < 0.3, 1.0, 0.0),
            lambda x: np.zeros_like(x),
            lambda x: np.zeros_like(x),
        )
        with pytest.warns(RuntimeWarning):
            assert norms_of(step, space).suspect
        assert not norms_of(step, space, breakpoints=(0.3,)).suspect

    def test_combined_error_of_polynomial(self):
        space = DgSpace(uniform_mesh(1), 2)
        f = SmoothFunction(lambda x: x, lambda x: np.ones_like(x), lambda x: np.zeros_like(x))
        # h = 1, so the scaled norms equal the plain ones
        assert combined_error(f, space) == pytest.approx(np.sqrt(10 / 3) + np.sqrt(2) + 1)

    def test_znorm_equivalent_to_l2(self):
        # observed C in znorm <= C ||u||_{L2} stays put under refinement
        ratios = []
        for n in (8, 16, 32, 64):
            space = DgSpace(uniform_mesh(n), 2)
            forms = assemble_ip(space)
            U = np.random.default_rng(n).standard_normal((space.ndofs, 50))
            z = np.sqrt(np.einsum("ij,ij->j", U, forms.M0 @ U))
            ratios.append((z / np.linalg.norm(U, axis=0)).max())
        assert max(ratios) / min(ratios) <= 1.5

    def test_continuity_bounded_by_sigma_max(self):
        smax = []
        for n in (8, 16, 32, 64):
            space = DgSpace(uniform_mesh(n), 2)
            forms = assemble_ip(space)
            rng = np.random.default_rng(n)
            U, V = rng.standard_normal((2, space.ndofs, 50))
            form = np.abs(np.einsum("ij,ij->j", V, forms.A_primal @ U))
            z = np.sqrt(np.einsum("ij,ij->j", U, forms.M0 @ U))
            ee = np.sqrt(np.einsum("ij,ij->j", V, forms.M2 @ V))
            smax.append(infsup_constant(forms.A_primal.T, forms.M0, forms.M2)[1])
            assert (form / (z * ee)).max() <= smax[-1] * (1 + 1e-10)
        assert max(smax) / min(smax) <= 2.0


class TestCoercivity:
    @pytest.mark.parametrize("sigma1", [0.0, 1.0])
    def test_positive_and_stable(self, sigma1):
        lam = [
            coercivity_constant(assemble_ip(DgSpace(uniform_mesh(n), 2), PenaltyParams(40.0, sigma1)))
            for n in (8, 16, 32, 64)
        ]
        assert min(lam) > 0
        assert max(lam) / min(lam) <= 2.0

    def test_baseline_value(self):
        lam = coercivity_constant(assemble_ip(DgSpace(uniform_mesh(8), 2), PARAMS))
        assert lam == pytest.approx(0.89783, abs=1e-4)

    def test_small_penalty_fails(self):
        forms = assemble_ip(DgSpace(uniform_mesh(8), 2), PenaltyParams(0.01, 1.0))
        assert coercivity_constant(forms) <= 0
        with pytest.raises(CoercivityError) as info:
            check_coercivity(forms)
        assert info.value.sigma0 == 0.01
        assert "increase sigma0" in str(info.value)

    def test_check_returns_lambda(self):
        forms = assemble_ip(DgSpace(uniform_mesh(4), 2), PARAMS)
        assert check_coercivity(forms) == pytest.approx(coercivity_constant(forms))
