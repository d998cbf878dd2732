"""Reduced-form VAR representation, least-squares fitting, structural
innovations, stability checks, and impulse responses.

All functions are pure: they never mutate their inputs and hold no module
state, so they are safe to call concurrently.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import (
    InsufficientSampleError,
    MisalignedDataError,
    SingularDesignError,
    SingularMatrixError,
)

DET_SINGULARITY_TOL = 1e-12


def _as_matrix(a, name: str) -> np.ndarray:
    x = np.asarray(a, dtype=float)
    if x.ndim != 2:
        raise MisalignedDataError(f"{name} must be 2-dimensional, got shape {x.shape}")
    return x


@dataclass(frozen=True)
class TimeSeriesPanel:
    """Observed sample plus the presample rows that condition the fit.

    ``values`` holds the T x n modeled observations; ``presample`` holds the
    p x n initial conditions that are never modeled themselves.
    """

    values: np.ndarray
    labels: Tuple[str, ...] = ()
    presample: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))

    def __post_init__(self):
        values = _as_matrix(self.values, "values")
        object.__setattr__(self, "values", values)
        if values.shape[0] < 1:
            raise MisalignedDataError("panel needs at least one observation")
        if not np.all(np.isfinite(values)):
            raise MisalignedDataError("panel values contain non-finite entries")
        pres = np.asarray(self.presample, dtype=float)
        if pres.size == 0:
            pres = np.empty((0, values.shape[1]))
        pres = _as_matrix(pres, "presample")
        if pres.shape[1] != values.shape[1]:
            raise MisalignedDataError("presample column count differs from values")
        if not np.all(np.isfinite(pres)):
            raise MisalignedDataError("presample contains non-finite entries")
        object.__setattr__(self, "presample", pres)
        labels = tuple(self.labels) if self.labels else tuple(f"y{i+1}" for i in range(values.shape[1]))
        if len(labels) != values.shape[1]:
            raise MisalignedDataError("label count differs from column count")
        if len(set(labels)) != len(labels):
            raise MisalignedDataError("labels must be unique")
        object.__setattr__(self, "labels", labels)

    @property
    def n_obs(self) -> int:
        return self.values.shape[0]

    @property
    def n_vars(self) -> int:
        return self.values.shape[1]


def make_panel(data, p: int, labels: Sequence[str] = ()) -> TimeSeriesPanel:
    """Split a full T-row array into presample (first ``p`` rows) and values."""
    data = _as_matrix(data, "data")
    if data.shape[0] <= p:
        raise InsufficientSampleError(f"need more than {p} rows, got {data.shape[0]}")
    return TimeSeriesPanel(values=data[p:], labels=tuple(labels), presample=data[:p])


@dataclass(frozen=True)
class DeterministicDesign:
    """Deterministic regressors (constant, trends, point dummies), T x d."""

    terms: np.ndarray
    names: Tuple[str, ...] = ()

    def __post_init__(self):
        terms = np.asarray(self.terms, dtype=float)
        if terms.size == 0:
            terms = terms.reshape(terms.shape[0] if terms.ndim > 0 else 0, 0)
        terms = _as_matrix(terms, "terms")
        if not np.all(np.isfinite(terms)):
            raise MisalignedDataError("design terms contain non-finite entries")
        object.__setattr__(self, "terms", terms)
        names = tuple(self.names) if self.names else tuple(f"x{i+1}" for i in range(terms.shape[1]))
        if len(names) != terms.shape[1]:
            raise MisalignedDataError("design name count differs from column count")
        object.__setattr__(self, "names", names)
        for j, name in enumerate(names):
            if name.startswith("dummy"):
                col = terms[:, j]
                if not np.all(np.isin(col, (0.0, 1.0))):
                    raise MisalignedDataError(f"dummy column {name!r} must contain only 0/1")

    @classmethod
    def empty(cls, n_obs: int) -> "DeterministicDesign":
        return cls(terms=np.empty((n_obs, 0)), names=())

    @property
    def n_terms(self) -> int:
        return self.terms.shape[1]

    def slice_rows(self, start: int) -> "DeterministicDesign":
        return DeterministicDesign(terms=self.terms[start:], names=self.names)


@dataclass(frozen=True)
class ReducedFormVar:
    """Reduced-form coefficients: intercept, lag matrices, deterministic terms.

    ``lag_coeffs`` stacks A_1..A_p as a (p, n, n) array where A_i[r, c] is the
    effect of variable c lagged i periods on variable r.  ``has_intercept``
    records whether the intercept is a free parameter or identically zero
    (used when the design already carries a constant column).
    """

    intercept: np.ndarray
    lag_coeffs: np.ndarray
    det_coeffs: np.ndarray
    has_intercept: bool = True

    def __post_init__(self):
        nu = np.atleast_1d(np.asarray(self.intercept, dtype=float))
        lags = np.asarray(self.lag_coeffs, dtype=float)
        if lags.size == 0:
            lags = lags.reshape(0, nu.shape[0], nu.shape[0])
        if lags.ndim != 3 or lags.shape[1] != lags.shape[2]:
            raise MisalignedDataError("lag_coeffs must have shape (p, n, n)")
        det = np.asarray(self.det_coeffs, dtype=float)
        if det.size == 0:
            det = det.reshape(nu.shape[0], 0)
        n = nu.shape[0]
        if lags.shape[1] != n or det.shape[0] != n:
            raise MisalignedDataError("coefficient dimensions disagree")
        for arr in (nu, lags, det):
            if not np.all(np.isfinite(arr)):
                raise MisalignedDataError("coefficients contain non-finite entries")
        object.__setattr__(self, "intercept", nu)
        object.__setattr__(self, "lag_coeffs", lags)
        object.__setattr__(self, "det_coeffs", det)

    @property
    def n_vars(self) -> int:
        return self.intercept.shape[0]

    @property
    def lag_order(self) -> int:
        return self.lag_coeffs.shape[0]

    @property
    def n_det(self) -> int:
        return self.det_coeffs.shape[1]

    def to_vector(self) -> np.ndarray:
        """Flatten the free coefficients into one vector.

        Layout: [intercept (if free), vec(A_1) .. vec(A_p) row-major,
        vec(det_coeffs) row-major].
        """
        parts = []
        if self.has_intercept:
            parts.append(self.intercept)
        parts.append(self.lag_coeffs.reshape(-1))
        parts.append(self.det_coeffs.reshape(-1))
        return np.concatenate(parts) if parts else np.empty(0)

    def with_vector(self, vec: np.ndarray) -> "ReducedFormVar":
        """Rebuild coefficients from a vector produced by :meth:`to_vector`."""
        vec = np.asarray(vec, dtype=float)
        n, p, d = self.n_vars, self.lag_order, self.n_det
        expect = (n if self.has_intercept else 0) + p * n * n + n * d
        if vec.shape != (expect,):
            raise MisalignedDataError(f"expected coefficient vector of length {expect}")
        pos = 0
        if self.has_intercept:
            nu = vec[:n]
            pos = n
        else:
            nu = np.zeros(n)
        lags = vec[pos:pos + p * n * n].reshape(p, n, n)
        pos += p * n * n
        det = vec[pos:].reshape(n, d)
        return ReducedFormVar(nu, lags, det, has_intercept=self.has_intercept)

    @property
    def n_params(self) -> int:
        return self.to_vector().shape[0]


@dataclass(frozen=True)
class StructuralMatrix:
    """Invertible n x n impact matrix mapping structural shocks to residuals."""

    values: np.ndarray

    def __post_init__(self):
        b = _as_matrix(self.values, "impact matrix")
        if b.shape[0] != b.shape[1]:
            raise MisalignedDataError("impact matrix must be square")
        if not np.all(np.isfinite(b)):
            raise MisalignedDataError("impact matrix contains non-finite entries")
        if abs(np.linalg.det(b)) < DET_SINGULARITY_TOL:
            raise SingularMatrixError("impact matrix is numerically singular")
        object.__setattr__(self, "values", b)

    @property
    def n(self) -> int:
        return self.values.shape[0]


def _regressor_matrix(panel: TimeSeriesPanel, design: Optional[DeterministicDesign],
                      p: int, include_intercept: bool) -> np.ndarray:
    T, n = panel.values.shape
    if p > 0 and panel.presample.shape[0] < p:
        raise InsufficientSampleError(
            f"panel carries {panel.presample.shape[0]} presample rows, lag order {p} needs {p}")
    full = np.vstack([panel.presample[panel.presample.shape[0] - p:], panel.values]) if p > 0 else panel.values
    cols = []
    if include_intercept:
        cols.append(np.ones((T, 1)))
    for lag in range(1, p + 1):
        cols.append(full[p - lag:p - lag + T])
    if design is not None and design.n_terms > 0:
        if design.terms.shape[0] != T:
            raise MisalignedDataError("design rows differ from panel observations")
        cols.append(design.terms)
    if not cols:
        return np.empty((T, 0))
    return np.hstack(cols)


def fit_ols(panel: TimeSeriesPanel, design: Optional[DeterministicDesign] = None,
            p: int = 1, include_intercept: bool = True) -> Tuple[ReducedFormVar, np.ndarray]:
    """Equation-by-equation least squares for the reduced form.

    Returns the fitted coefficients and the T x n residual matrix.  Raises
    :class:`InsufficientSampleError` when T is too small and
    :class:`SingularDesignError` when the regressor matrix is rank deficient.
    """
    T, n = panel.values.shape
    d = design.n_terms if design is not None else 0
    if T <= n * p + d + 1:
        raise InsufficientSampleError(
            f"T={T} too small for lag order {p} with {d} deterministic terms")
    X = _regressor_matrix(panel, design, p, include_intercept)
    Y = panel.values
    if X.shape[1] == 0:
        var = ReducedFormVar(np.zeros(n), np.zeros((p, n, n)), np.zeros((n, d)),
                             has_intercept=False)
        return var, Y.copy()
    rank = np.linalg.matrix_rank(X)
    if rank < X.shape[1]:
        raise SingularDesignError(
            f"regressor matrix has rank {rank} < {X.shape[1]} columns")
    beta, *_ = np.linalg.lstsq(X, Y, rcond=None)
    resid = Y - X @ beta
    pos = 1 if include_intercept else 0
    nu = beta[0] if include_intercept else np.zeros(n)
    lags = np.empty((p, n, n))
    for i in range(p):
        lags[i] = beta[pos + i * n:pos + (i + 1) * n].T
    det = beta[pos + p * n:].T if d > 0 else np.zeros((n, d))
    var = ReducedFormVar(nu, lags, det, has_intercept=include_intercept)
    return var, resid


def reduced_form_residuals(panel: TimeSeriesPanel, design: Optional[DeterministicDesign],
                           var: ReducedFormVar) -> np.ndarray:
    """Residuals u_t implied by the given reduced-form coefficients."""
    T, n = panel.values.shape
    p = var.lag_order
    X = _regressor_matrix(panel, design, p, include_intercept=var.has_intercept)
    beta_rows = []
    if var.has_intercept:
        beta_rows.append(var.intercept[None, :])
    for i in range(p):
        beta_rows.append(var.lag_coeffs[i].T)
    if var.n_det > 0:
        beta_rows.append(var.det_coeffs.T)
    if not beta_rows:
        return panel.values.copy()
    beta = np.vstack(beta_rows)
    return panel.values - X @ beta


def structural_innovations(panel: TimeSeriesPanel, design: Optional[DeterministicDesign],
                           var: ReducedFormVar, B: StructuralMatrix) -> np.ndarray:
    """Innovations e_t = B^{-1} u_t given reduced-form coefficients and B."""
    u = reduced_form_residuals(panel, design, var)
    return innovations_from_residuals(u, B.values)


def innovations_from_residuals(u: np.ndarray, B: np.ndarray) -> np.ndarray:
    if abs(np.linalg.det(B)) < DET_SINGULARITY_TOL:
        raise SingularMatrixError("impact matrix is numerically singular")
    return np.linalg.solve(B, u.T).T


def companion_matrix(var: ReducedFormVar) -> np.ndarray:
    """Stacked companion form of the lag polynomial, shape (n*p, n*p)."""
    n, p = var.n_vars, var.lag_order
    if p == 0:
        return np.zeros((0, 0))
    comp = np.zeros((n * p, n * p))
    for i in range(p):
        comp[:n, i * n:(i + 1) * n] = var.lag_coeffs[i]
    if p > 1:
        comp[n:, :-n] = np.eye(n * (p - 1))
    return comp


@dataclass(frozen=True)
class StabilityResult:
    stable: bool
    max_modulus: float


def is_stable(var: ReducedFormVar, tol: float = 1e-8) -> StabilityResult:
    """True iff all companion eigenvalues have modulus < 1 - tol."""
    comp = companion_matrix(var)
    if comp.shape[0] == 0:
        return StabilityResult(True, 0.0)
    mods = np.abs(np.linalg.eigvals(comp))
    mx = float(np.max(mods))
    return StabilityResult(mx < 1.0 - tol, mx)


def impulse_responses(var: ReducedFormVar, B: StructuralMatrix, horizon: int) -> np.ndarray:
    """Responses of each variable (axis 1) to each unit shock (axis 2).

    Returns an array of shape (horizon+1, n, n); the horizon-0 slice equals B.
    """
    if horizon < 0:
        raise MisalignedDataError("horizon must be non-negative")
    n, p = var.n_vars, var.lag_order
    out = np.empty((horizon + 1, n, n))
    out[0] = B.values
    if p == 0:
        out[1:] = 0.0
        return out
    comp = companion_matrix(var)
    power = np.eye(n * p)
    for h in range(1, horizon + 1):
        power = comp @ power
        out[h] = power[:n, :n] @ B.values
    return out


def simulate_var(var: ReducedFormVar, B: StructuralMatrix, shocks: np.ndarray,
                 presample: Optional[np.ndarray] = None,
                 design: Optional[DeterministicDesign] = None) -> np.ndarray:
    """Propagate structural shocks through the VAR, returning T x n values."""
    shocks = _as_matrix(shocks, "shocks")
    T = shocks.shape[0]
    n, p = var.n_vars, var.lag_order
    if shocks.shape[1] != n:
        raise MisalignedDataError("shock columns differ from system dimension")
    hist = np.zeros((p, n)) if presample is None else _as_matrix(presample, "presample").copy()
    if hist.shape[0] != p:
        raise MisalignedDataError(f"presample must have {p} rows")
    u = shocks @ B.values.T
    det = np.zeros((T, n))
    if design is not None and design.n_terms > 0:
        if design.terms.shape[0] != T:
            raise MisalignedDataError("design rows differ from shock rows")
        det = design.terms @ var.det_coeffs.T
    out = np.empty((T, n))
    buf = np.vstack([hist, np.zeros((T, n))])
    for t in range(T):
        y = var.intercept + det[t] + u[t]
        for i in range(p):
            y = y + var.lag_coeffs[i] @ buf[p + t - 1 - i]
        buf[p + t] = y
        out[t] = y
    return out
