import numpy as np
import pytest

from proxysvar.errors import (
    InsufficientSampleError,
    SingularDesignError,
    SingularMatrixError,
)
from proxysvar.varcore import (
    DeterministicDesign,
    ReducedFormVar,
    StructuralMatrix,
    TimeSeriesPanel,
    companion_matrix,
    fit_ols,
    impulse_responses,
    is_stable,
    make_panel,
    simulate_var,
    structural_innovations,
)


def stable_var2(seed=5):
    rng = np.random.default_rng(seed)
    while True:
        lags = rng.normal(scale=0.3, size=(2, 3, 3))
        var = ReducedFormVar(rng.normal(size=3), lags, np.zeros((3, 0)))
        if is_stable(var).stable:
            return var


class TestFitOls:
    def test_noiseless_var1_recovers_generator(self):
        rng = np.random.default_rng(0)
        a1 = np.array([[0.5, 0.2], [-0.1, 0.4]])
        nu = np.array([0.3, -0.2])
        var = ReducedFormVar(nu, a1[None], np.zeros((2, 0)))
        pres = rng.normal(size=(1, 2)) * 5.0  # start away from the fixed point
        data = simulate_var(var, StructuralMatrix(np.eye(2)),
                            np.zeros((25, 2)), presample=pres)
        panel = TimeSeriesPanel(values=data, presample=pres)
        fitted, resid = fit_ols(panel, None, p=1)
        assert np.allclose(fitted.lag_coeffs[0], a1, atol=1e-8)
        assert np.allclose(fitted.intercept, nu, atol=1e-8)
        assert np.max(np.abs(resid)) < 1e-8

    def test_iid_data_matches_normal_equations_oracle(self):
        rng = np.random.default_rng(1)
        data = rng.normal(size=(10001, 3))
        panel = make_panel(data, p=1)
        fitted, resid = fit_ols(panel, None, p=1)
        # independent oracle straight from the normal equations
        X = np.hstack([np.ones((10000, 1)), data[:-1]])
        Y = data[1:]
        beta = np.linalg.solve(X.T @ X, X.T @ Y)
        assert np.allclose(fitted.intercept, beta[0], atol=1e-10)
        assert np.allclose(fitted.lag_coeffs[0], beta[1:].T, atol=1e-10)
        assert np.max(np.abs(fitted.lag_coeffs[0])) < 0.1

    def test_ar1_monte_carlo(self):
        rng = np.random.default_rng(2)
        T = 100000
        y = np.empty(T + 1)
        y[0] = 0.0
        eps = rng.normal(size=T)
        for t in range(T):
            y[t + 1] = 0.5 * y[t] + eps[t]
        panel = make_panel(y[:, None], p=1)
        fitted, _ = fit_ols(panel, None, p=1)
        assert abs(fitted.lag_coeffs[0, 0, 0] - 0.5) < 0.01

    def test_reconstruction_identity(self):
        rng = np.random.default_rng(3)
        data = rng.normal(size=(80, 2)).cumsum(axis=0) * 0.1 + rng.normal(size=(80, 2))
        design = DeterministicDesign(np.arange(78, dtype=float)[:, None], ("trend",))
        panel = make_panel(data, p=2)
        fitted, resid = fit_ols(panel, design, p=2)
        from proxysvar.varcore import reduced_form_residuals

        again = reduced_form_residuals(panel, design, fitted)
        assert np.allclose(again, resid, atol=1e-10)
        # residuals orthogonal to regressors
        X = np.hstack([np.ones((78, 1)), data[1:79], data[:78], design.terms])
        assert np.max(np.abs(X.T @ resid)) < 1e-6

    def test_column_reordering_equivariance(self):
        rng = np.random.default_rng(4)
        data = rng.normal(size=(60, 3))
        perm = [2, 0, 1]
        f1, _ = fit_ols(make_panel(data, 1), None, p=1)
        f2, _ = fit_ols(make_panel(data[:, perm], 1, labels=("a", "b", "c")), None, p=1)
        a1 = f1.lag_coeffs[0]
        assert np.allclose(f2.lag_coeffs[0], a1[np.ix_(perm, perm)], atol=1e-10)
        assert np.allclose(f2.intercept, f1.intercept[perm], atol=1e-10)

    def test_insufficient_sample(self):
        panel = make_panel(np.random.default_rng(0).normal(size=(6, 2)), p=2)
        with pytest.raises(InsufficientSampleError):
            fit_ols(panel, None, p=2)

    def test_singular_design(self):
        data = np.random.default_rng(0).normal(size=(40, 2))
        design = DeterministicDesign(np.ones((38, 2)), ("c1", "c2"))
        with pytest.raises(SingularDesignError):
            fit_ols(make_panel(data, 2), design, p=2)


class TestStructuralInnovations:
    def setup_method(self):
        rng = np.random.default_rng(7)
        self.var = stable_var2()
        self.shocks = rng.normal(size=(150, 3))
        self.B = StructuralMatrix(np.array([[1.0, 0.0, 0.2],
                                            [0.4, 1.1, -0.3],
                                            [0.0, 0.5, 0.9]]))
        pres = rng.normal(size=(2, 3))
        data = simulate_var(self.var, self.B, self.shocks, presample=pres)
        self.panel = TimeSeriesPanel(values=data, presample=pres)

    def test_identity_impact_returns_residuals(self):
        from proxysvar.varcore import reduced_form_residuals

        u = reduced_form_residuals(self.panel, None, self.var)
        e = structural_innovations(self.panel, None, self.var, StructuralMatrix(np.eye(3)))
        assert np.allclose(e, u, atol=1e-12)

    def test_generator_values_recover_shocks(self):
        e = structural_innovations(self.panel, None, self.var, self.B)
        assert np.allclose(e, self.shocks, atol=1e-10)

    def test_scaling(self):
        e1 = structural_innovations(self.panel, None, self.var, StructuralMatrix(np.eye(3)))
        e2 = structural_innovations(self.panel, None, self.var, StructuralMatrix(2 * np.eye(3)))
        assert np.allclose(e2, 0.5 * e1, atol=1e-12)

    def test_round_trip_any_invertible(self):
        rng = np.random.default_rng(11)
        from proxysvar.varcore import reduced_form_residuals

        u = reduced_form_residuals(self.panel, None, self.var)
        for _ in range(5):
            B = rng.normal(size=(3, 3)) + 3 * np.eye(3)
            e = structural_innovations(self.panel, None, self.var, StructuralMatrix(B))
            assert np.allclose(e @ B.T, u, atol=1e-10)

    def test_singular_impact_rejected(self):
        with pytest.raises(SingularMatrixError):
            StructuralMatrix(np.zeros((3, 3)))


class TestStability:
    def test_scalar_half(self):
        var = ReducedFormVar(np.zeros(2), (0.5 * np.eye(2))[None], np.zeros((2, 0)))
        res = is_stable(var)
        assert res.stable and abs(res.max_modulus - 0.5) < 1e-12

    def test_unit_root(self):
        var = ReducedFormVar(np.zeros(2), np.eye(2)[None], np.zeros((2, 0)))
        res = is_stable(var)
        assert not res.stable and abs(res.max_modulus - 1.0) < 1e-12

    def test_triangular_eigenvalues(self):
        a1 = np.array([[0.9, 0.5], [0.0, 0.9]])
        res = is_stable(ReducedFormVar(np.zeros(2), a1[None], np.zeros((2, 0))))
        assert res.stable and abs(res.max_modulus - 0.9) < 1e-12


class TestImpulseResponses:
    def test_horizon_zero_is_impact(self):
        var = stable_var2()
        B = StructuralMatrix(np.eye(3) + 0.1)
        irf = impulse_responses(var, B, 0)
        assert irf.shape == (1, 3, 3)
        assert np.array_equal(irf[0], B.values)

    def test_diagonal_var1_geometric_decay(self):
        a = 0.7
        var = ReducedFormVar(np.zeros(2), (a * np.eye(2))[None], np.zeros((2, 0)))
        B = StructuralMatrix(np.array([[1.0, 0.3], [0.0, 0.8]]))
        irf = impulse_responses(var, B, 10)
        for h in range(11):
            assert np.allclose(irf[h], a ** h * B.values, atol=1e-12)

    def test_against_unit_shock_simulation_oracle(self):
        var = stable_var2(seed=9)
        rng = np.random.default_rng(10)
        B = StructuralMatrix(rng.normal(size=(3, 3)) + 2 * np.eye(3))
        H = 20
        irf = impulse_responses(var, B, H)
        # brute force: propagate one unit of each shock through the recursion
        for j in range(3):
            resp = np.zeros((H + 1, 3))
            hist = np.zeros((H + 1 + var.lag_order, 3))
            hist[var.lag_order] = B.values[:, j]
            resp[0] = B.values[:, j]
            for h in range(1, H + 1):
                y = np.zeros(3)
                for i in range(var.lag_order):
                    y += var.lag_coeffs[i] @ hist[var.lag_order + h - 1 - i]
                hist[var.lag_order + h] = y
                resp[h] = y
            assert np.allclose(irf[:, :, j], resp, atol=1e-10)

    def test_stable_irf_converges(self):
        rng = np.random.default_rng(12)
        for _ in range(5):
            a1 = rng.normal(scale=0.25, size=(3, 3))
            var = ReducedFormVar(np.zeros(3), a1[None], np.zeros((3, 0)))
            res = is_stable(var)
            if not res.stable or res.max_modulus > 0.95:
                continue
            irf = impulse_responses(var, StructuralMatrix(np.eye(3)), 200)
            assert np.max(np.abs(irf[200])) < 1e-6

    def test_lag_zero_var(self):
        var = ReducedFormVar(np.zeros(2), np.zeros((0, 2, 2)), np.zeros((2, 0)),
                             has_intercept=False)
        irf = impulse_responses(var, StructuralMatrix(np.eye(2)), 4)
        assert np.allclose(irf[1:], 0.0)
        assert is_stable(var).stable

    def test_companion_shape(self):
        var = stable_var2()
        comp = companion_matrix(var)
        assert comp.shape == (6, 6)
        assert np.array_equal(comp[3:, :3], np.eye(3))
