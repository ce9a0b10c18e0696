import numpy as np
import pytest

from sparsefit import glm, lla, penalty, tuning, wlasso
from sparsefit.exceptions import FamilyMismatch
from sparsefit.penalty import PenaltySpec

from conftest import orthonormal_gaussian, random_dataset

SCAD2 = PenaltySpec("scad", 2.0, a=3.7)


def naive_problem(d, pen, b0):
    """The one-step subproblem written directly: quadratic expansion at b0
    with per-coordinate weights n * p'_lam(|b0_j|), no rescaling tricks."""
    sqrt_d = np.sqrt(glm.curvature_weights(d, b0))
    X = sqrt_d[:, None] * d.model_matrix
    y = sqrt_d * (d.model_matrix @ b0)
    w = np.zeros(d.n_coef)
    for j in lla._predictor_indices(d):
        dj = penalty.derivative(pen, abs(b0[j]))
        w[j] = np.inf if dj > lla.WEIGHT_CAP else d.n * dj
    return wlasso.WlassoProblem(X, y, w)


class TestWorkingDataType1:
    def test_l1_gaussian_is_identity(self):
        d = random_dataset(0, 12, 3)
        b0 = np.array([0.5, -1.0, 2.0])
        wd = lla.build_working_data_type1(d, b0, PenaltySpec("l1", 2.0))
        assert np.allclose(wd.wdesign, d.design)
        assert np.allclose(wd.wresponse, d.design @ b0)
        assert wd.pinned == ()
        assert np.all(wd.scale_factors == 1.0)

    def test_log_zero_coordinate_pinned(self):
        d = random_dataset(0, 12, 3)
        b0 = np.array([0.5, 0.0, 2.0])
        wd = lla.build_working_data_type1(d, b0, PenaltySpec("log", 2.0))
        assert wd.pinned == (1,)
        assert np.all(wd.wdesign[:, 1] == 0.0)
        assert wd.scale_factors[1] == 0.0

    def test_lq_column_scaling(self):
        d = random_dataset(0, 12, 3)
        b0 = np.array([4.0, 1.0, 1.0])
        wd = lla.build_working_data_type1(d, b0, PenaltySpec("lq", 1.0, q=0.5))
        # p'(4) = 0.5 * 4^{-0.5} = 0.25, so the column grows by 4
        assert np.allclose(wd.wdesign[:, 0], 4.0 * d.design[:, 0])
        assert wd.scale_factors[0] == pytest.approx(4.0)

    def test_rejects_scad(self):
        d = random_dataset(0, 12, 3)
        with pytest.raises(FamilyMismatch):
            lla.build_working_data_type1(d, np.zeros(3), SCAD2)


class TestWorkingDataType2:
    def test_empty_u_is_no_projection(self):
        d = random_dataset(1, 14, 3)
        b0 = np.array([0.5, -1.0, 1.5])  # all below a*lam: V only
        wd = lla.build_working_data_type2(d, b0, SCAD2)
        assert wd.u_set == ()
        assert np.allclose(wd.proj_response, wd.wresponse)

    def test_all_big_coefficients_reduce_to_ols(self):
        d = random_dataset(2, 20, 3)
        b0 = np.array([9.0, -8.0, 10.0])  # all beyond a*lam = 7.4
        wd = lla.build_working_data_type2(d, b0, SCAD2)
        assert wd.v_set == ()
        assert set(wd.u_set) == {0, 1, 2}
        fit = lla.one_step(d, SCAD2, b0=b0)
        ols = np.linalg.lstsq(d.design, d.design @ b0, rcond=None)[0]
        assert np.allclose(fit.coefficients, ols, atol=1e-8)

    def test_unit_scale_at_lambda(self):
        d = random_dataset(3, 14, 3)
        b0 = np.array([1.0, 9.0, 9.0])  # p'_lam(1) = lam -> scale 1
        wd = lla.build_working_data_type2(d, b0, SCAD2)
        assert wd.scale_factors[0] == pytest.approx(1.0)
        assert 0 in wd.v_set

    def test_rejects_type1_families(self):
        d = random_dataset(0, 12, 3)
        with pytest.raises(FamilyMismatch):
            lla.build_working_data_type2(d, np.zeros(3), PenaltySpec("l1", 2.0))


class TestOneStepOrthonormal:
    def setup_method(self):
        self.z = np.array([8.0, 4.0, 1.0, 0.2])
        self.d = orthonormal_gaussian(self.z)

    def test_unpenalized_block_kept_exactly(self):
        fit = lla.one_step(self.d, SCAD2)
        assert fit.coefficients[0] == pytest.approx(8.0, abs=1e-8)

    def test_small_coordinate_killed(self):
        fit = lla.one_step(self.d, SCAD2)
        assert fit.coefficients[2] == 0.0
        assert fit.coefficients[3] == 0.0

    def test_middle_coordinate_soft_thresholded(self):
        fit = lla.one_step(self.d, SCAD2)
        assert fit.coefficients[1] == pytest.approx(4.0 - 3.4 / 2.7, abs=1e-8)

    def test_lambda_zero_returns_ols(self):
        fit = lla.one_step(self.d, PenaltySpec("scad", 0.0))
        assert np.allclose(fit.coefficients, self.z, atol=1e-10)
        assert fit.method == "one_step"
        assert fit.iterations == 1

    def test_support_and_exact_zeros(self):
        fit = lla.one_step(self.d, SCAD2)
        assert fit.support == (0, 1)
        for j in (2, 3):
            assert fit.coefficients[j] == 0.0


@pytest.mark.parametrize("family", ["gaussian", "logistic", "poisson"])
@pytest.mark.parametrize(
    "pen",
    [
        SCAD2,
        PenaltySpec("scad", 0.4),
        PenaltySpec("l1", 0.3),
        PenaltySpec("lq", 0.3, q=0.5),
        PenaltySpec("log", 0.2),
    ],
)
def test_one_step_matches_naive_direct_solve(family, pen):
    d = random_dataset(17, 60, 5, family)
    b0 = glm.fit_mle(d)
    fit = lla.one_step(d, pen, b0=b0)
    prob = naive_problem(d, pen, b0)
    direct = wlasso.solve(prob, tol=1e-10)
    assert np.max(np.abs(fit.coefficients - direct.beta)) <= 1e-6


@pytest.mark.parametrize("family", ["gaussian", "logistic"])
def test_one_step_kkt_stationarity(family):
    d = random_dataset(23, 50, 6, family)
    b0 = glm.fit_mle(d)
    pen = PenaltySpec("scad", 0.3)
    fit = lla.one_step(d, pen, b0=b0)
    prob = naive_problem(d, pen, b0)
    assert wlasso.certify_kkt(prob, fit.coefficients) <= 1e-6


def test_one_step_with_intercept():
    rng = np.random.default_rng(8)
    X = rng.standard_normal((60, 4))
    y = 2.0 + X @ np.array([1.5, 0.0, 0.0, -1.0]) + 0.3 * rng.standard_normal(60)
    d = glm.Dataset(X, y, "gaussian", intercept=True)
    fit = lla.one_step(d, PenaltySpec("scad", 0.5))
    assert fit.intercept == pytest.approx(2.0, abs=0.3)
    assert set(fit.support) <= {0, 1, 2, 3}


class TestKStep:
    def test_k1_identical_to_one_step(self):
        d = random_dataset(31, 40, 4)
        one = lla.one_step(d, SCAD2)
        k1 = lla.k_step(d, SCAD2, k=1)
        assert np.array_equal(one.coefficients, k1.coefficients)
        assert k1.method == "one_step"

    def test_lambda_zero_any_k_is_mle(self):
        d = random_dataset(31, 40, 4)
        mle = glm.fit_mle(d)
        k3 = lla.k_step(d, PenaltySpec("scad", 0.0), k=3)
        assert np.allclose(k3.coefficients, mle, atol=1e-8)

    def test_orthonormal_second_step(self):
        z = np.array([4.0])
        d = orthonormal_gaussian(z, n=8)
        k2 = lla.k_step(d, SCAD2, k=2)
        b1 = 4.0 - 3.4 / 2.7
        w2 = (7.4 - b1) / 2.7
        assert k2.coefficients[0] == pytest.approx(4.0 - w2, abs=1e-8)
        assert k2.iterations == 2
        assert k2.method == "k_step(2)"

    def test_k_validation(self):
        d = random_dataset(0, 10, 2)
        with pytest.raises(ValueError):
            lla.k_step(d, SCAD2, k=0)


class TestFullLla:
    def test_lambda_zero_returns_mle(self):
        d = random_dataset(5, 40, 4)
        fit = lla.full_lla(d, PenaltySpec("scad", 0.0))
        assert np.allclose(fit.coefficients, glm.fit_mle(d), atol=1e-8)
        assert fit.iterations == 1

    def test_orthonormal_fixed_point_above_knee(self):
        d = orthonormal_gaussian([9.0])
        fit = lla.full_lla(d, SCAD2)
        assert fit.coefficients[0] == pytest.approx(9.0, abs=1e-8)

    @pytest.mark.parametrize("family", ["gaussian", "logistic"])
    @pytest.mark.parametrize("seed", range(5))
    def test_ascent_property(self, family, seed):
        d = random_dataset(100 + seed, 60, 6, family)
        fit = lla.full_lla(d, PenaltySpec("scad", 0.25))
        trace = np.asarray(fit.objective_trace)
        assert np.all(np.diff(trace) >= -1e-8)
        assert fit.converged

    def test_strict_increase_before_convergence_gaussian(self):
        d = random_dataset(7, 50, 5)
        fit = lla.full_lla(d, PenaltySpec("scad", 0.3))
        trace = np.asarray(fit.objective_trace)
        # every step that moved the iterate strictly improved Q
        assert np.all(trace[1:-1] < trace[-1] + 1e-12)

    def test_rejects_unbounded_penalties(self):
        d = random_dataset(0, 10, 2)
        for fam, kw in (("log", {}), ("lq", {"q": 0.5})):
            with pytest.raises(FamilyMismatch):
                lla.full_lla(d, PenaltySpec(fam, 1.0, **kw))

    def test_l1_converges_immediately(self):
        d = random_dataset(9, 30, 4)
        fit = lla.full_lla(d, PenaltySpec("l1", 0.5))
        assert fit.iterations <= 2
        direct = wlasso.solve(
            wlasso.WlassoProblem(d.design, d.response, np.full(4, 0.5 * d.n))
        )
        assert np.allclose(fit.coefficients, direct.beta, atol=1e-7)


class TestPath:
    @pytest.mark.parametrize("family", ["gaussian", "logistic"])
    @pytest.mark.parametrize(
        "pen", [SCAD2, PenaltySpec("log", 1.0), PenaltySpec("lq", 1.0, q=0.01)]
    )
    def test_path_matches_per_point_one_step(self, family, pen):
        d = random_dataset(41, 50, 5, family)
        b0 = glm.fit_mle(d)
        lam_max = lla.one_step_lambda_max(d, pen, b0=b0)
        grid = tuning.default_lambda_grid(lam_max, 10)
        fits = lla.one_step_path(d, pen, grid, b0=b0)
        for lam, fit in zip(grid, fits):
            spec = PenaltySpec(pen.family, float(lam), a=pen.a, q=pen.q)
            single = lla.one_step(d, spec, b0=b0)
            assert np.max(np.abs(fit.coefficients - single.coefficients)) <= 1e-7

    def test_lambda_max_gives_empty_support(self):
        for pen in (SCAD2, PenaltySpec("log", 1.0), PenaltySpec("l1", 1.0)):
            d = random_dataset(43, 40, 4)
            b0 = glm.fit_mle(d)
            lam_max = lla.one_step_lambda_max(d, pen, b0=b0)
            fit = lla.one_step(d, PenaltySpec(pen.family, lam_max, a=pen.a, q=pen.q), b0=b0)
            assert fit.support == ()

    def test_type1_lambda_max_is_tight(self):
        d = random_dataset(47, 40, 4)
        b0 = glm.fit_mle(d)
        pen = PenaltySpec("log", 1.0)
        lam_max = lla.one_step_lambda_max(d, pen, b0=b0)
        fit = lla.one_step(d, PenaltySpec("log", 0.98 * lam_max), b0=b0)
        assert fit.support != ()

    def test_grid_validation(self):
        d = random_dataset(0, 10, 2)
        with pytest.raises(ValueError):
            lla.one_step_path(d, SCAD2, [0.1, 0.2])
