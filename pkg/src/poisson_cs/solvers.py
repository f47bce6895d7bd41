"""l1-regularized reconstruction from Poisson-corrupted compressive measurements.

Two entry points:

``solve_penalized``
    minimize  lam * ||theta||_1 + fit(y, A @ theta)
    where the data-fit term is the Jensen-Shannon divergence, the symmetrized
    Stirling negative log-likelihood, or the generalized KL divergence, each
    optionally smoothed by an offset beta (fit on y+beta against u+beta).

``solve_p2``
    minimize  ||theta||_1  subject to  sqrt(J(y, A @ theta)) <= epsilon
    realized as an outer bisection on log(lam) over the penalized JSD
    problem: the map lam -> sqjsd(y, A theta*(lam)) is monotone
    non-decreasing, so the largest lam whose solution still meets the
    constraint yields the minimal-l1 feasible point.

The inner solver is proximal gradient with backtracking line search and
optional FISTA-style acceleration under a monotone restart, so the recorded
objective trace never increases.  Zero-count measurements are retained for
the JSD fit (finite by the 0*log(0) = 0 convention) and dropped for the
SNLL/GenKL fits when beta = 0.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .divergences import LOG_2PI, _jsd_terms
from .errors import (
    DomainError,
    InfeasibleEpsilonError,
    InfeasibleStartError,
    InvalidParamError,
)
from .transforms import BasisKind, OrthonormalBasis

__all__ = [
    "FitKind",
    "FitTerm",
    "SolverConfig",
    "SolveResult",
    "fit_value_and_gradient",
    "gradient_scale",
    "soft_threshold",
    "solve_penalized",
    "solve_p2",
    "rrmse",
]

_HALF_LOG2 = 0.5 * math.log(2.0)


class FitKind(enum.Enum):
    JSD = "jsd"
    SNLL = "snll"
    GEN_KL = "gen_kl"


@dataclass(frozen=True)
class FitTerm:
    """Choice of data-fit divergence plus smoothing offset beta >= 0."""

    kind: FitKind = FitKind.JSD
    beta: float = 0.0

    def __post_init__(self):
        if self.beta < 0.0:
            raise InvalidParamError("beta must be >= 0")


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 2000
    grad_tol: float = 1e-12
    objective_tol: float = 1e-8
    step_init: float | None = None
    backtrack_factor: float = 0.5
    nonneg_signal: bool = False
    nonneg_coeffs: bool = False
    enforce_intensity: float | None = None
    acceleration: bool = True

    def __post_init__(self):
        if self.max_iters < 1:
            raise InvalidParamError("max_iters must be >= 1")
        if self.grad_tol <= 0.0 or self.objective_tol <= 0.0:
            raise InvalidParamError("tolerances must be > 0")
        if not (0.0 < self.backtrack_factor < 1.0):
            raise InvalidParamError("backtrack_factor must lie in (0,1)")


@dataclass
class SolveResult:
    theta_star: np.ndarray
    objective_trace: list
    iterations: int
    converged: bool
    constraint_residual: float | None = None
    lambda_used: float | None = None


def soft_threshold(v, t: float) -> np.ndarray:
    """Prox of t*||.||_1: sign(v) * max(|v| - t, 0)."""
    v = np.asarray(v, dtype=float)
    if t < 0.0:
        raise InvalidParamError("threshold must be >= 0")
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _fit_pieces(kind: FitKind, yb: np.ndarray, ub: np.ndarray, want_value: bool,
                want_grad: bool, grad_floor: float = 1e-300):
    """Value and/or gradient w.r.t. u of the chosen fit on offset vectors.

    Values are exact.  Gradients replace u + beta by max(u + beta,
    grad_floor): this turns the infinite slope at the domain boundary into a
    large finite one, so a monotone line search on the exact objective can
    still probe and leave the boundary.  Callers guarantee ub >= 0 (JSD) or
    ub > 0 (SNLL/GenKL) wherever the value is requested.
    """
    value = grad = None
    if kind is FitKind.JSD:
        if want_value:
            value = float(np.sum(_jsd_terms(yb, ub)))
        if want_grad:
            ubf = np.maximum(ub, grad_floor)
            s = yb + ubf
            grad = 0.5 * np.log(2.0 * ubf / s)
            # At yb = ub = 0 the one-sided derivative along u is log(2)/2.
            grad = np.where(yb + ub > 0.0, grad, _HALF_LOG2)
    elif kind is FitKind.GEN_KL:
        pos = yb > 0.0
        if want_value:
            terms = ub - yb
            terms[pos] += yb[pos] * np.log(yb[pos] / ub[pos])
            value = float(np.sum(terms))
        if want_grad:
            grad = 1.0 - yb / np.maximum(ub, grad_floor)
    else:  # SNLL
        if want_value:
            value = float(
                np.sum(
                    yb * np.log(yb / ub)
                    + ub * np.log(ub / yb)
                    + 0.5 * np.log(yb)
                    + 0.5 * np.log(ub)
                    + LOG_2PI
                )
            )
        if want_grad:
            ubf = np.maximum(ub, grad_floor)
            grad = 1.0 - yb / ubf + np.log(ubf / yb) + 0.5 / ubf
    return value, grad


def fit_value_and_gradient(fit: FitTerm, y, u):
    """Fit value and its exact analytic gradient with respect to u.

    ``y`` may be a MeasurementVector or a plain count array.  Requires
    u_i + beta > 0 everywhere; the SNLL and GenKL fits with beta = 0
    additionally require y_i > 0 (callers drop zero counts first).
    """
    y = np.asarray(getattr(y, "counts", y), dtype=float)
    u = np.asarray(u, dtype=float)
    if y.shape != u.shape:
        raise DomainError(f"length {y.size} vs {u.size}")
    yb = y + fit.beta
    ub = u + fit.beta
    if np.any(ub <= 0.0):
        raise DomainError("fit undefined: u_i + beta <= 0")
    if fit.kind is not FitKind.JSD and np.any(yb <= 0.0):
        raise DomainError(f"{fit.kind.value} with beta=0 requires y_i > 0")
    value, grad = _fit_pieces(fit.kind, yb, ub, True, True)
    return value, grad


class _FitModel:
    """Fit term restricted to the rows the solver actually optimizes over.

    Rows whose A-row is identically zero are constant in theta and dropped;
    zero-count rows are additionally dropped for SNLL/GenKL at beta = 0.
    """

    def __init__(self, A: np.ndarray, counts: np.ndarray, fit: FitTerm):
        keep = np.any(A != 0.0, axis=1)
        if fit.beta == 0.0 and fit.kind is not FitKind.JSD:
            keep &= counts > 0
        self.A = A[keep]
        self.fit = fit
        self.yb = counts[keep].astype(float) + fit.beta
        # Boundary-gradient clip, relative to the data scale; rates this far
        # below the counts are indistinguishable from zero for the fit value.
        self._grad_floor = 1e-12 * (float(np.mean(self.yb)) + 1.0) if self.yb.size else 1e-12

    def rates(self, theta: np.ndarray) -> np.ndarray:
        return self.A @ theta

    def value(self, u: np.ndarray) -> float:
        """Exact fit value, +inf outside the closed domain.

        JSD is finite on the whole non-negative orthant; SNLL/GenKL blow up
        as soon as any rate hits 0 (their kept rows all have counts > 0).
        """
        ub = u + self.fit.beta
        if self.fit.kind is FitKind.JSD:
            if np.any(ub < 0.0):
                return math.inf
        elif np.any(ub <= 0.0):
            return math.inf
        val, _ = _fit_pieces(self.fit.kind, self.yb, ub, True, False)
        return val

    def value_grad_theta(self, u: np.ndarray):
        """Value and gradient w.r.t. theta; only called where value is finite."""
        val, gu = _fit_pieces(self.fit.kind, self.yb, u + self.fit.beta, True, True,
                              self._grad_floor)
        return val, self.A.T @ gu

    def grad_theta(self, u: np.ndarray) -> np.ndarray:
        _, gu = _fit_pieces(self.fit.kind, self.yb, u + self.fit.beta, False, True,
                            self._grad_floor)
        return self.A.T @ gu

    def curvature_scale(self, u: np.ndarray) -> float:
        """Per-coordinate second-derivative scale for the initial step size.

        Evaluated no closer to the boundary than the half-data point
        u ~ (y+1)/2: the solution sits near u ~ y, and backtracking owns
        correctness for whatever this estimate misses.
        """
        ub = np.maximum(u + self.fit.beta, 0.5 * (self.yb + 1.0))
        if self.fit.kind is FitKind.JSD:
            c = 0.5 / ub
        elif self.fit.kind is FitKind.GEN_KL:
            c = self.yb / ub**2
        else:
            c = self.yb / ub**2 + 1.0 / ub
        return float(np.max(c)) if c.size else 1.0


def _spectral_norm_sq(A: np.ndarray, iters: int = 40) -> float:
    """Largest squared singular value by (deterministic) power iteration."""
    rng = np.random.Generator(np.random.PCG64(0))
    v = rng.standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    for _ in range(iters):
        w = A.T @ (A @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
    return float(np.linalg.norm(A @ v) ** 2)


def _default_start(A: np.ndarray, basis: OrthonormalBasis, counts: np.ndarray):
    # Constant signal carrying the total measured flux: domain-safe because
    # every nonzero A-row then sees a strictly positive rate.
    total = float(np.sum(counts))
    if total <= 0.0:
        total = 1.0
    x0 = np.full(basis.dim, total / basis.dim)
    return basis.analyze(x0)


def _prox(v: np.ndarray, t: float, cfg: SolverConfig, basis: OrthonormalBasis):
    w = soft_threshold(v, t)
    if cfg.nonneg_coeffs:
        w = np.maximum(w, 0.0)
    if cfg.nonneg_signal:
        if basis.kind is BasisKind.IDENTITY:
            w = np.maximum(w, 0.0)
        else:
            # One clamp-and-reanalyze pass; heuristic for non-canonical bases.
            w = basis.analyze(np.maximum(basis.synthesize(w), 0.0))
    return w


def gradient_scale(A, basis: OrthonormalBasis, y, fit: FitTerm) -> float:
    """sup-norm of the fit gradient at the default start.

    Natural unit for regularization grids: lam far above this freezes theta
    at (nearly) zero, lam far below is effectively unregularized.
    """
    A = np.asarray(A, dtype=float)
    counts = np.asarray(getattr(y, "counts", y), dtype=float)
    model = _FitModel(A, counts, fit)
    theta0 = _default_start(A, basis, counts)
    _, g = model.value_grad_theta(model.rates(theta0))
    return float(np.max(np.abs(g))) if g.size else 1.0


def solve_penalized(
    A,
    basis: OrthonormalBasis,
    y,
    fit: FitTerm,
    lam: float,
    cfg: SolverConfig | None = None,
    theta0=None,
) -> SolveResult:
    """Proximal-gradient minimization of lam*||theta||_1 + fit(y, A theta)."""
    if lam <= 0.0:
        raise InvalidParamError("lam must be > 0")
    cfg = cfg or SolverConfig()
    A = np.asarray(A, dtype=float)
    counts = np.asarray(getattr(y, "counts", y), dtype=float)
    model = _FitModel(A, counts, fit)

    if theta0 is None:
        theta0 = _default_start(A, basis, counts)
    x = np.asarray(theta0, dtype=float).copy()
    u = model.rates(x)
    f_x = model.value(u)
    if not math.isfinite(f_x):
        raise InfeasibleStartError("starting point violates the fit domain")

    if cfg.step_init is not None:
        eta = cfg.step_init
    else:
        L = _spectral_norm_sq(model.A) * model.curvature_scale(u)
        eta = 1.0 / L if L > 0.0 else 1.0

    F_cur = f_x + lam * float(np.sum(np.abs(x)))
    trace = [F_cur]
    z = x.copy()
    t_momentum = 1.0
    converged = False
    flat_count = 0
    bt = cfg.backtrack_factor
    iterations = 0

    for iterations in range(1, cfg.max_iters + 1):
        eta = min(eta / bt, 1e18)  # let the step recover after conservative phases

        base, u_base, f_base = z, None, None
        if cfg.acceleration and base is not x:
            u_base = model.rates(base)
            f_base = model.value(u_base)
        if u_base is None or not math.isfinite(f_base):
            base, u_base, f_base = x, u, f_x
            z = x.copy()
            t_momentum = 1.0
        g_base = model.grad_theta(u_base)

        accepted = None
        for attempt in range(2):  # second pass restarts from x on non-monotone step
            eta_try = eta
            for _ in range(200):
                cand = _prox(base - eta_try * g_base, eta_try * lam, cfg, basis)
                d = cand - base
                u_cand = model.rates(cand)
                f_cand = model.value(u_cand)
                if math.isfinite(f_cand):
                    quad = f_base + float(g_base @ d) + float(d @ d) / (2.0 * eta_try)
                    if f_cand <= quad + 1e-12 * max(1.0, abs(quad)):
                        break
                eta_try *= bt
            else:
                cand = None
            if cand is None:
                break
            F_cand = f_cand + lam * float(np.sum(np.abs(cand)))
            if F_cand <= F_cur:
                accepted = (cand, u_cand, f_cand, F_cand, d, eta_try)
                break
            # Monotone restart: drop the momentum point and retry from x.
            if base is x or not cfg.acceleration:
                break
            base, u_base, f_base = x, u, f_x
            g_base = model.grad_theta(u_base)
            z = x.copy()
            t_momentum = 1.0

        if accepted is None:
            converged = True  # no descent step exists at any step size
            break
        cand, u_cand, f_cand, F_cand, d, eta = accepted

        grad_map = float(np.linalg.norm(d)) / eta
        rel_change = abs(F_cur - F_cand) / max(1.0, abs(F_cand))
        flat_count = flat_count + 1 if rel_change < cfg.objective_tol else 0

        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_momentum**2))
        z = cand + ((t_momentum - 1.0) / t_next) * (cand - x)
        t_momentum = t_next
        x, u, f_x, F_cur = cand, u_cand, f_cand, F_cand
        trace.append(F_cur)

        if flat_count >= 5 or grad_map < cfg.grad_tol:
            converged = True
            break

    if cfg.enforce_intensity is not None:
        signal_l1 = float(np.sum(np.abs(basis.synthesize(x))))
        if signal_l1 > 0.0:
            x = x * (cfg.enforce_intensity / signal_l1)

    return SolveResult(
        theta_star=x,
        objective_trace=trace,
        iterations=iterations,
        converged=converged,
        lambda_used=lam,
    )


def _sqjsd_of(A, counts, theta, beta: float) -> float:
    """sqrt(J(y, A theta)) with the same offset convention as the fit."""
    u = A @ np.asarray(theta, dtype=float)
    terms = _jsd_terms(counts + beta, np.maximum(u, 0.0) + beta)
    return math.sqrt(max(float(np.sum(terms)), 0.0))


def solve_p2(
    A,
    basis: OrthonormalBasis,
    y,
    epsilon: float,
    cfg: SolverConfig | None = None,
    beta: float = 0.0,
    constraint_rtol: float = 0.01,
    max_bisect: int = 40,
) -> SolveResult:
    """Minimal-l1 coefficients subject to sqjsd(y, A theta) <= epsilon.

    Bisects log(lam) over the penalized JSD problem, warm-starting each
    solve, and returns the feasible solution of largest lam (smallest l1
    norm) once sqjsd is within ``constraint_rtol * epsilon`` of the radius
    or the bisection budget is exhausted.
    """
    if epsilon <= 0.0:
        raise InvalidParamError("epsilon must be > 0")
    cfg = cfg or SolverConfig()
    A = np.asarray(A, dtype=float)
    counts = np.asarray(getattr(y, "counts", y), dtype=float)
    fit = FitTerm(FitKind.JSD, beta)

    zero = np.zeros(A.shape[1])
    s_zero = _sqjsd_of(A, counts, zero, beta)
    if s_zero <= epsilon:
        # Constraint already slack at the origin: nothing beats ||0||_1.
        return SolveResult(
            theta_star=zero,
            objective_trace=[0.0],
            iterations=0,
            converged=True,
            constraint_residual=s_zero - epsilon,
            lambda_used=None,
        )

    model = _FitModel(A, counts, fit)
    theta_start = _default_start(A, basis, counts)
    _, g0 = model.value_grad_theta(model.rates(theta_start))
    g_inf = float(np.max(np.abs(g0)))
    lam_hi = max(g_inf, 1e-12) * 100.0
    lam_lo = 1e-8

    def _solve(lam, warm):
        try:
            return solve_penalized(A, basis, y, fit, lam, cfg, theta0=warm)
        except InfeasibleStartError:
            return solve_penalized(A, basis, y, fit, lam, cfg, theta0=None)

    res_lo = _solve(lam_lo, theta_start)
    s_lo = _sqjsd_of(A, counts, res_lo.theta_star, beta)
    if s_lo > epsilon:
        raise InfeasibleEpsilonError(
            f"achievable sqjsd {s_lo:.4g} exceeds epsilon {epsilon:.4g}"
        )

    best, lam_best, s_best = res_lo, lam_lo, s_lo
    res_hi = _solve(lam_hi, best.theta_star)
    s_hi = _sqjsd_of(A, counts, res_hi.theta_star, beta)
    if s_hi <= epsilon:
        best, lam_best, s_best = res_hi, lam_hi, s_hi
    else:
        for _ in range(max_bisect):
            if abs(s_best - epsilon) <= constraint_rtol * epsilon:
                break
            if lam_hi / lam_lo < 1.01:
                # The map lam -> sqjsd jumps across epsilon here (support
                # collapse); fall through to the scaling refinement below.
                break
            lam_mid = math.sqrt(lam_lo * lam_hi)
            res_mid = _solve(lam_mid, best.theta_star)
            s_mid = _sqjsd_of(A, counts, res_mid.theta_star, beta)
            if s_mid <= epsilon:
                lam_lo, best, lam_best, s_best = lam_mid, res_mid, lam_mid, s_mid
            else:
                lam_hi = lam_mid

    theta = best.theta_star
    if s_best < epsilon * (1.0 - constraint_rtol):
        # The penalized path overshot the constraint.  Shrinking theta toward
        # zero keeps it feasible while strictly lowering the l1 objective, so
        # bisect the scale until the constraint is (nearly) active; sqjsd of
        # the scaled copies rises continuously to s_zero > epsilon at 0.
        t_lo, t_hi = 0.0, 1.0
        for _ in range(60):
            t_mid = 0.5 * (t_lo + t_hi)
            s_mid = _sqjsd_of(A, counts, t_mid * theta, beta)
            if s_mid <= epsilon:
                t_hi, s_best = t_mid, s_mid
            else:
                t_lo = t_mid
            if abs(s_mid - epsilon) <= constraint_rtol * epsilon:
                break
        theta = t_hi * theta
        s_best = _sqjsd_of(A, counts, theta, beta)

    return SolveResult(
        theta_star=theta,
        objective_trace=best.objective_trace,
        iterations=best.iterations,
        converged=best.converged,
        constraint_residual=s_best - epsilon,
        lambda_used=lam_best,
    )


def rrmse(x, x_star) -> float:
    """Relative reconstruction error ||x - x*||_2 / ||x||_2."""
    x = np.asarray(x, dtype=float)
    x_star = np.asarray(x_star, dtype=float)
    denom = float(np.linalg.norm(x))
    if denom == 0.0:
        raise InvalidParamError("rrmse undefined for a zero reference signal")
    return float(np.linalg.norm(x - x_star)) / denom
