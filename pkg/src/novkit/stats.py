"""Regression battery and hypothesis tests.

All fitters are deterministic given data (and seed, where bootstrap is
involved).  OLS solves through an orthogonal decomposition, the logistic
model through Newton-Raphson with step-halving, and quantile regression
through IRLS with an annealed smoothing floor plus a vertex-polish step.
"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy import stats as spstats

from .corpus import PAPER, PATENT, AnalysisTable
from .errors import (ConvergenceError, DataError, DegenerateGroupError,
                     NumericError, RankDeficiencyError)

RANK_TOL = 1e-10  # relative singular-value cutoff for rank checks


# ---------------------------------------------------------------------------
# Design matrices

@dataclass(frozen=True)
class DesignMatrix:
    """Named regression design: intercept first, response attached."""

    names: tuple[str, ...]
    X: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    response: str = "y"

    def __post_init__(self):
        if self.X.shape[0] != self.y.shape[0]:
            raise DataError("X and y row counts differ")
        if self.X.shape[1] != len(self.names):
            raise DataError("column names do not match the matrix width")
        zero = [name for j, name in enumerate(self.names) if not np.any(self.X[:, j])]
        if zero:
            raise DataError(f"all-zero design columns: {zero}")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def k(self) -> int:
        return self.X.shape[1]


def _check_rank(design: DesignMatrix) -> None:
    singular = np.linalg.svd(design.X, compute_uv=False)
    rank = int(np.sum(singular > RANK_TOL * singular[0]))
    if rank < design.k:
        # QR with pivoting points at the dependent columns.
        from scipy.linalg import qr
        _, _, piv = qr(design.X, mode="economic", pivoting=True)
        dependent = [design.names[j] for j in sorted(piv[rank:])]
        raise RankDeficiencyError(dependent)


def build_design(table: AnalysisTable, response: str, controls: Sequence[str] = (),
                 year_effects: bool = True, type_effect: bool = False) -> DesignMatrix:
    """Assemble intercept, institution dummies, controls, and fixed effects.

    Year dummies use the earliest year as reference; the type dummy marks
    patents against the paper reference.
    """
    rows = table.rows
    if not rows:
        raise DataError("cannot build a design matrix from an empty table")

    names = ["intercept", "academia", "cooperation"]
    columns = [
        np.ones(len(rows)),
        np.array([r.academia for r in rows], dtype=np.float64),
        np.array([r.cooperation for r in rows], dtype=np.float64),
    ]
    for control in controls:
        values = [getattr(r, control) for r in rows]
        if any(v is None for v in values):
            raise DataError(f"control {control!r} is undefined for some rows")
        names.append(control)
        columns.append(np.array(values, dtype=np.float64))
    if year_effects:
        years = sorted({r.year for r in rows})
        for year in years[1:]:
            names.append(f"year_{year}")
            columns.append(np.array([1.0 if r.year == year else 0.0 for r in rows]))
    if type_effect:
        names.append("type_patent")
        columns.append(np.array([1.0 if r.doc_type == PATENT else 0.0 for r in rows]))

    responses = [getattr(r, response) for r in rows]
    if any(v is None for v in responses):
        raise DataError(f"response {response!r} is undefined for some rows")
    y = np.array(responses, dtype=np.float64)
    return DesignMatrix(names=tuple(names), X=np.column_stack(columns), y=y, response=response)


# ---------------------------------------------------------------------------
# Results

@dataclass(frozen=True)
class RegressionResult:
    model_kind: str  # "ols" | "logistic" | "quantile"
    coefficients: dict[str, float]
    std_errors: dict[str, float]
    p_values: dict[str, float]
    fit: float
    fit_label: str
    n: int
    tau: Optional[float] = None
    odds_ratios: Optional[dict[str, float]] = None
    residuals: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def coef_vector(self, names: Sequence[str]) -> np.ndarray:
        return np.array([self.coefficients[name] for name in names])


def significance_stars(p: float) -> str:
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.1:
        return "*"
    return ""


def _wald_stats(beta: np.ndarray, se: np.ndarray) -> np.ndarray:
    """beta/se with zero SEs mapped to +-inf and nan SEs left as nan."""
    stats = np.full(beta.shape, np.nan)
    positive = se > 0
    stats[positive] = beta[positive] / se[positive]
    exact = se == 0
    stats[exact] = np.inf * np.sign(beta[exact])
    return stats


# ---------------------------------------------------------------------------
# OLS

def ols_fit(design: DesignMatrix, robust_kind: str = "HC1") -> RegressionResult:
    """Least squares via QR with heteroskedasticity-robust standard errors.

    robust_kind is one of HC0-HC3 (HC1 default) or "classical".
    """
    _check_rank(design)
    X, y = design.X, design.y
    n, k = design.n, design.k
    if n <= k:
        raise DataError(f"need n > k, got n={n}, k={k}")

    q_mat, r_mat = np.linalg.qr(X)
    beta = np.linalg.solve(r_mat, q_mat.T @ y)
    fitted = X @ beta
    resid = y - fitted

    r_inv = np.linalg.inv(r_mat)
    xtx_inv = r_inv @ r_inv.T
    df = n - k

    if robust_kind == "classical":
        sigma2 = float(resid @ resid) / df
        cov = sigma2 * xtx_inv
    else:
        leverage = np.sum(q_mat ** 2, axis=1)
        if robust_kind == "HC0":
            weights = resid ** 2
        elif robust_kind == "HC1":
            weights = resid ** 2 * (n / df)
        elif robust_kind == "HC2":
            weights = resid ** 2 / (1.0 - leverage)
        elif robust_kind == "HC3":
            weights = resid ** 2 / (1.0 - leverage) ** 2
        else:
            raise DataError(f"unknown robust covariance kind {robust_kind!r}")
        meat = (X * weights[:, None]).T @ X
        cov = xtx_inv @ meat @ xtx_inv

    se = np.sqrt(np.diag(cov))
    p = 2.0 * spstats.t.sf(np.abs(_wald_stats(beta, se)), df)

    sst = float(np.sum((y - y.mean()) ** 2))
    ssr = float(resid @ resid)
    if sst > 0:
        r2 = 1.0 - ssr / sst
    else:
        r2 = 1.0 if ssr <= 1e-24 else float("nan")

    return RegressionResult(
        model_kind="ols",
        coefficients=dict(zip(design.names, beta.tolist())),
        std_errors=dict(zip(design.names, se.tolist())),
        p_values=dict(zip(design.names, p.tolist())),
        fit=r2,
        fit_label="r_squared",
        n=n,
        residuals=resid,
    )


# ---------------------------------------------------------------------------
# Logistic regression

def _log_likelihood(eta: np.ndarray, y: np.ndarray) -> float:
    # sum y*eta - log(1 + exp(eta)), stable for large |eta|
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def logistic_fit(design: DesignMatrix, robust: bool = True,
                 max_iter: int = 100, tol: float = 1e-10) -> RegressionResult:
    """Maximum likelihood by Newton-Raphson with step-halving.

    Converges when the log-likelihood change drops below ``tol``; sandwich
    standard errors by default; odds ratios are exp(coefficient).
    """
    _check_rank(design)
    X, y = design.X, design.y
    n, k = design.n, design.k
    classes = np.unique(y)
    if not np.all(np.isin(classes, (0.0, 1.0))):
        raise DataError("logistic response must be binary 0/1")
    if len(classes) < 2:
        raise DegenerateGroupError("logistic response has a single class")

    beta = np.zeros(k)
    ll = _log_likelihood(X @ beta, y)
    converged = False
    for _ in range(max_iter):
        eta = X @ beta
        p = 1.0 / (1.0 + np.exp(-eta))
        w = p * (1.0 - p)
        grad = X.T @ (y - p)
        hess = (X * w[:, None]).T @ X
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"singular Hessian: {exc}", last_coefficients=dict(zip(design.names, beta))) from exc

        scale = 1.0
        new_ll = _log_likelihood(X @ (beta + scale * step), y)
        while new_ll < ll and scale > 1e-10:
            scale *= 0.5
            new_ll = _log_likelihood(X @ (beta + scale * step), y)
        beta = beta + scale * step
        if abs(new_ll - ll) < tol:
            ll = new_ll
            converged = True
            break
        ll = new_ll
    if not converged:
        raise ConvergenceError(f"logistic fit did not converge in {max_iter} iterations",
                               last_coefficients=dict(zip(design.names, beta)))

    if np.max(np.abs(beta)) > 30.0:
        warnings.warn("logistic coefficients exceed 30 in magnitude; possible quasi-separation",
                      RuntimeWarning, stacklevel=2)

    eta = X @ beta
    p = 1.0 / (1.0 + np.exp(-eta))
    w = p * (1.0 - p)
    hess = (X * w[:, None]).T @ X
    bread = np.linalg.inv(hess)
    if robust:
        score_sq = (y - p) ** 2
        meat = (X * score_sq[:, None]).T @ X
        cov = bread @ meat @ bread
    else:
        cov = bread
    # under (quasi-)separation the Hessian is near-singular and the sandwich
    # diagonal can go numerically negative; surface those cells as nan
    with np.errstate(invalid="ignore"):
        se = np.sqrt(np.diag(cov))
    p_values = 2.0 * spstats.norm.sf(np.abs(_wald_stats(beta, se)))

    p_bar = float(y.mean())
    ll_null = n * (p_bar * math.log(p_bar) + (1.0 - p_bar) * math.log(1.0 - p_bar))
    mcfadden = 1.0 - ll / ll_null

    coefficients = dict(zip(design.names, beta.tolist()))
    return RegressionResult(
        model_kind="logistic",
        coefficients=coefficients,
        std_errors=dict(zip(design.names, se.tolist())),
        p_values=dict(zip(design.names, p_values.tolist())),
        fit=mcfadden,
        fit_label="mcfadden_pseudo_r2",
        n=n,
        odds_ratios={name: math.exp(value) for name, value in coefficients.items()},
        residuals=y - p,
    )


# ---------------------------------------------------------------------------
# Quantile regression

def check_loss(residuals: np.ndarray, tau: float) -> float:
    return float(np.sum(residuals * (tau - (residuals < 0))))


def _weighted_lstsq(X: np.ndarray, y: np.ndarray, w: np.ndarray) -> np.ndarray:
    sw = np.sqrt(w)
    beta, *_ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
    return beta


def _vertex_polish(X: np.ndarray, y: np.ndarray, beta: np.ndarray, tau: float,
                   max_sweeps: int = 40, pivot_budget: int = 20_000) -> np.ndarray:
    """Snap the IRLS iterate to the optimal exact-fit basic solution.

    The check-loss optimum interpolates k observations.  Start from a
    full-rank subset among the smallest residuals, then walk improving
    single-row swaps; the objective is convex piecewise-linear, so a local
    vertex optimum is global.  Pivoting is skipped on large problems where
    the IRLS iterate is already adequate.
    """
    n, k = X.shape
    order = np.argsort(np.abs(y - X @ beta), kind="stable")
    basis: list[int] = []
    for idx in order:
        candidate = basis + [int(idx)]
        if np.linalg.matrix_rank(X[candidate]) == len(candidate):
            basis = candidate
            if len(basis) == k:
                break
    if len(basis) < k:
        return beta

    def solve(rows):
        try:
            return np.linalg.solve(X[rows], y[rows])
        except np.linalg.LinAlgError:
            return None

    best_beta = solve(basis)
    best_obj = check_loss(y - X @ best_beta, tau)

    if n * k * k <= pivot_budget:
        for _ in range(max_sweeps):
            improved = False
            for pos in range(k):
                for row in range(n):
                    if row in basis:
                        continue
                    candidate = list(basis)
                    candidate[pos] = row
                    cand_beta = solve(candidate)
                    if cand_beta is None:
                        continue
                    obj = check_loss(y - X @ cand_beta, tau)
                    if obj < best_obj - 1e-12:
                        basis, best_beta, best_obj = candidate, cand_beta, obj
                        improved = True
                        break
                if improved:
                    break
            if not improved:
                break

    if best_obj <= check_loss(y - X @ beta, tau) + 1e-12:
        return best_beta
    return beta


SMOOTHING_LEVELS = (1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8)


def _quantile_coefficients(X: np.ndarray, y: np.ndarray, tau: float,
                           coef_tol: float = 1e-8, level_iters: int = 120) -> np.ndarray:
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    best_obj, best_beta = check_loss(y - X @ beta, tau), beta
    for delta in SMOOTHING_LEVELS:
        stalled = 0
        for _ in range(level_iters):
            resid = y - X @ beta
            w = np.where(resid >= 0, tau, 1.0 - tau) / np.maximum(np.abs(resid), delta)
            new_beta = _weighted_lstsq(X, y, w)
            change = float(np.max(np.abs(new_beta - beta)))
            beta = new_beta
            obj = check_loss(y - X @ beta, tau)
            if obj < best_obj - 1e-14:
                best_obj, best_beta = obj, beta
                stalled = 0
            else:
                stalled += 1
            if change < max(coef_tol, delta * 1e-2):
                break
            if stalled >= 25:
                break  # IRLS cycles near the optimum; move to the next level
    if not np.all(np.isfinite(best_beta)):
        raise ConvergenceError("quantile IRLS diverged to non-finite coefficients")
    return _vertex_polish(X, y, best_beta, tau)


def quantile_fit(design: DesignMatrix, tau: float, n_boot: int = 200,
                 seed: Optional[int] = 0) -> RegressionResult:
    """Check-loss minimization at quantile ``tau`` with bootstrap errors.

    IRLS with the smoothing floor annealed from 1e-3 down to 1e-8, then a
    vertex polish; standard errors come from a seeded nonparametric
    bootstrap over rows.
    """
    if not 0.0 < tau < 1.0:
        raise DataError(f"tau must be in (0, 1), got {tau}")
    _check_rank(design)
    X, y = design.X, design.y
    n, k = design.n, design.k
    if n <= k:
        raise DataError(f"need n > k, got n={n}, k={k}")

    beta = _quantile_coefficients(X, y, tau)

    rng = np.random.default_rng(seed)
    replicates = []
    for _ in range(n_boot):
        idx = rng.integers(0, n, size=n)
        try:
            replicates.append(_quantile_coefficients(X[idx], y[idx], tau))
        except (ConvergenceError, np.linalg.LinAlgError):
            continue
    if n_boot > 0 and len(replicates) < max(10, n_boot // 4):
        raise ConvergenceError(f"only {len(replicates)}/{n_boot} bootstrap replicates converged")
    if replicates:
        se = np.std(np.asarray(replicates), axis=0, ddof=1)
    else:
        se = np.full(k, np.nan)
    p_values = 2.0 * spstats.norm.sf(np.abs(_wald_stats(beta, se)))

    # Koenker-Machado pseudo-R1 against the best constant fit.
    loss = check_loss(y - X @ beta, tau)
    ys = np.sort(y)
    candidates = {ys[min(max(math.ceil(n * tau) - 1, 0), n - 1)],
                  ys[min(math.ceil(n * tau), n - 1)]}
    null_loss = min(check_loss(y - c, tau) for c in candidates)
    pseudo_r1 = 1.0 - loss / null_loss if null_loss > 0 else (1.0 if loss <= 1e-24 else float("nan"))

    return RegressionResult(
        model_kind="quantile",
        coefficients=dict(zip(design.names, beta.tolist())),
        std_errors=dict(zip(design.names, se.tolist())),
        p_values=dict(zip(design.names, p_values.tolist())),
        fit=pseudo_r1,
        fit_label="pseudo_r1",
        n=n,
        tau=tau,
        residuals=y - X @ beta,
    )


# ---------------------------------------------------------------------------
# Diagnostics

@dataclass(frozen=True)
class VifResult:
    per_column: dict[str, float]
    mean_vif: float
    collinear: tuple[str, ...]  # columns with (numerically) infinite VIF


def vif(X: np.ndarray, names: Sequence[str]) -> VifResult:
    """Variance inflation factors: regress each column on the others plus an
    intercept; VIF_j = 1 / (1 - R^2_j)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] < 2:
        raise DataError("VIF needs at least two regressors")
    if X.shape[1] != len(names):
        raise DataError("names do not match the matrix width")

    values: dict[str, float] = {}
    collinear = []
    n = X.shape[0]
    for j, name in enumerate(names):
        others = np.column_stack([np.ones(n), np.delete(X, j, axis=1)])
        target = X[:, j]
        coef, *_ = np.linalg.lstsq(others, target, rcond=None)
        resid = target - others @ coef
        sst = float(np.sum((target - target.mean()) ** 2))
        if sst == 0:
            raise DataError(f"regressor {name!r} is constant")
        r2 = 1.0 - float(resid @ resid) / sst
        if r2 >= 1.0 - 1e-12:
            values[name] = float("inf")
            collinear.append(name)
        else:
            values[name] = 1.0 / (1.0 - r2)
    finite = [v for v in values.values() if math.isfinite(v)]
    mean_vif = float("inf") if collinear else sum(finite) / len(finite)
    return VifResult(per_column=values, mean_vif=mean_vif, collinear=tuple(collinear))


def pearson_matrix(series: Mapping[str, Sequence[float]]) -> tuple[tuple[str, ...], np.ndarray]:
    """Pearson correlation matrix over named, equal-length series."""
    names = tuple(series.keys())
    if len(names) < 2:
        raise DataError("need at least two series")
    data = np.array([np.asarray(series[name], dtype=np.float64) for name in names])
    if data.ndim != 2:
        raise DataError("series lengths differ")
    centered = data - data.mean(axis=1, keepdims=True)
    norms = np.sqrt(np.sum(centered ** 2, axis=1))
    for name, norm in zip(names, norms):
        if norm == 0.0:
            raise DataError(f"series {name!r} is constant; correlation undefined")
    matrix = (centered @ centered.T) / np.outer(norms, norms)
    matrix = np.clip((matrix + matrix.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(matrix, 1.0)
    return names, matrix


# ---------------------------------------------------------------------------
# Mann-Whitney U

@dataclass(frozen=True)
class MannWhitneyResult:
    u_a: float
    u_b: float
    z: Optional[float]
    p_two_sided: float
    method: str  # "exact" | "normal"


def _midranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for idx in order[i:j + 1]:
            ranks[idx] = avg
        i = j + 1
    return ranks


def mann_whitney_u(a: Sequence[float], b: Sequence[float],
                   exact_limit: int = 16) -> MannWhitneyResult:
    """Two-sided Mann-Whitney U test.

    Exact enumeration of rank assignments when the pooled sample is small and
    tie-free; otherwise a normal approximation with tie and continuity
    corrections.
    """
    if not len(a) or not len(b):
        raise DataError("both samples must be non-empty")
    n_a, n_b = len(a), len(b)
    combined = list(a) + list(b)
    ranks = _midranks(combined)
    rank_sum_a = sum(ranks[:n_a])
    u_a = rank_sum_a - n_a * (n_a + 1) / 2.0
    u_b = n_a * n_b - u_a

    has_ties = len(set(combined)) < len(combined)
    total = n_a + n_b
    if total <= exact_limit and not has_ties:
        sorted_ranks = list(range(1, total + 1))
        lo = min(u_a, u_b)
        hi = n_a * n_b - lo
        count = 0
        n_outcomes = 0
        for subset in itertools.combinations(sorted_ranks, n_a):
            u = sum(subset) - n_a * (n_a + 1) / 2.0
            n_outcomes += 1
            if u <= lo or u >= hi:
                count += 1
        p = min(1.0, count / n_outcomes)
        return MannWhitneyResult(u_a=u_a, u_b=u_b, z=None, p_two_sided=p, method="exact")

    mu = n_a * n_b / 2.0
    tie_counts = [len(list(g)) for _, g in itertools.groupby(sorted(combined))]
    tie_term = sum(t ** 3 - t for t in tie_counts) / (total * (total - 1))
    var = n_a * n_b / 12.0 * ((total + 1) - tie_term)
    if var <= 0:
        return MannWhitneyResult(u_a=u_a, u_b=u_b, z=0.0, p_two_sided=1.0, method="normal")
    z = (abs(u_a - mu) - 0.5) / math.sqrt(var)
    z = max(z, 0.0)
    p = min(1.0, 2.0 * float(spstats.norm.sf(z)))
    return MannWhitneyResult(u_a=u_a, u_b=u_b, z=z, p_two_sided=p, method="normal")


# ---------------------------------------------------------------------------
# Model suite

POOLED_CONTROLS = ("ln_authors", "ln_institutions", "ln_entities")
PAPER_CONTROLS = POOLED_CONTROLS
PATENT_CONTROLS = POOLED_CONTROLS + ("ln_ipc", "ln_family")


@dataclass(frozen=True)
class ModelSuiteSpec:
    quantiles: tuple[float, ...] = (0.25, 0.50, 0.75)
    robust_kind: str = "HC1"
    seed: int = 0
    bootstrap_reps: int = 200
    pooled_response: str = "z_novelty"
    per_type_response: str = "novelty_score"
    binary_response: str = "ns_top"
    controls_pooled: tuple[str, ...] = POOLED_CONTROLS
    controls_paper: tuple[str, ...] = PAPER_CONTROLS
    controls_patent: tuple[str, ...] = PATENT_CONTROLS
    year_effects: bool = True

    @classmethod
    def from_json(cls, path) -> "ModelSuiteSpec":
        with open(path, "r", encoding="utf-8") as handle:
            raw = json.load(handle)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise DataError(f"unknown model-spec fields: {sorted(unknown)}")
        for key in ("quantiles", "controls_pooled", "controls_paper", "controls_patent"):
            if key in raw:
                raw[key] = tuple(raw[key])
        return cls(**raw)


def run_model_suite(table: AnalysisTable, spec: ModelSuiteSpec = ModelSuiteSpec()) -> list[tuple[str, RegressionResult]]:
    """The full model grid: pooled OLS/logistic with year and type effects,
    per-doc-type OLS/logistic with and without controls, and quantile fits.

    Emits (model_name, result) pairs; 24 fits when both document types are
    present and quantiles are the default three.
    """
    results: list[tuple[str, RegressionResult]] = []

    def ols(name, subset, response, controls, type_fe=False):
        design = build_design(subset, response, controls,
                              year_effects=spec.year_effects, type_effect=type_fe)
        results.append((name, ols_fit(design, robust_kind=spec.robust_kind)))

    def logit(name, subset, controls, type_fe=False):
        design = build_design(subset, spec.binary_response, controls,
                              year_effects=spec.year_effects, type_effect=type_fe)
        results.append((name, logistic_fit(design)))

    def quantile(name, subset, controls, tau):
        design = build_design(subset, spec.per_type_response, controls,
                              year_effects=spec.year_effects)
        results.append((name, quantile_fit(design, tau, n_boot=spec.bootstrap_reps, seed=spec.seed)))

    has_both = len({r.doc_type for r in table.rows}) == 2
    if has_both:
        ols("pooled_ols_base", table, spec.pooled_response, (), type_fe=True)
        ols("pooled_ols_controls", table, spec.pooled_response, spec.controls_pooled, type_fe=True)
        logit("pooled_logit_base", table, (), type_fe=True)
        logit("pooled_logit_controls", table, spec.controls_pooled, type_fe=True)

    per_type = ((PAPER, spec.controls_paper), (PATENT, spec.controls_patent))
    for doc_type, controls in per_type:
        subset = table.subset(doc_type)
        if not len(subset):
            continue
        ols(f"{doc_type}_ols_base", subset, spec.per_type_response, ())
        ols(f"{doc_type}_ols_controls", subset, spec.per_type_response, controls)
        logit(f"{doc_type}_logit_base", subset, ())
        logit(f"{doc_type}_logit_controls", subset, controls)

    for doc_type, controls in per_type:
        subset = table.subset(doc_type)
        if not len(subset):
            continue
        for tau in spec.quantiles:
            pct = int(round(tau * 100))
            quantile(f"{doc_type}_q{pct}_base", subset, (), tau)
            quantile(f"{doc_type}_q{pct}_controls", subset, controls, tau)

    return results


def export_model_results(models: Sequence[tuple[str, RegressionResult]], path) -> None:
    """CSV: model,term,coef,se,p,stars,or,fit,n,fit_label (odds ratios only
    for logistic rows)."""
    import csv

    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["model", "term", "coef", "se", "p", "stars", "or", "fit", "n", "fit_label"])
        for name, result in models:
            for term in result.coefficients:
                odds = result.odds_ratios.get(term) if result.odds_ratios else None
                writer.writerow([
                    name, term,
                    repr(result.coefficients[term]),
                    repr(result.std_errors[term]),
                    repr(result.p_values[term]),
                    significance_stars(result.p_values[term]),
                    repr(odds) if odds is not None else "",
                    repr(result.fit),
                    result.n,
                    result.fit_label,
                ])
