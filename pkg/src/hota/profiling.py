"""Full and constrained maximum likelihood, information blocks, and the
profile log-likelihood curve.

Optimization runs on the unconstrained working scale; every reported
quantity (estimates, observed information, nuisance-block determinants,
profile derivatives) is on the natural scale. The profile curve keeps an
interpolating cubic spline of ell_p so grid values are reproduced exactly,
plus interpolants of the constrained nuisance estimates and nuisance-block
log-determinants for evaluation between grid points.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize

from . import _numdiff as nd
from .errors import FitError, ValidationError
from .models import ModelSpec, Transform
from .priors import PriorSpec

_RESTARTS = 3
_MAXITER = 600


@dataclass(frozen=True, eq=False)
class FitResult:
    """Unconstrained MLE with observed information on the natural scale."""

    theta_hat: np.ndarray
    theta_hat_natural: np.ndarray
    loglik_max: float
    obs_info: np.ndarray
    se: np.ndarray


@dataclass(frozen=True, eq=False)
class ProfilePoint:
    psi: float
    lambda_hat_psi: np.ndarray
    ell_p: float
    log_det_j_ll: float
    theta_psi_natural: np.ndarray


@dataclass(frozen=True, eq=False)
class ProfileCurve:
    points: tuple[ProfilePoint, ...]
    ell_p_spline: Callable[[float], float]
    ell_p_prime: Callable[[float], float]
    j_p_hat: float
    psi_index: int
    psi_hat: float
    loglik_max: float
    log_det_j_ll_hat: float
    fit: FitResult
    model: ModelSpec
    prior: PriorSpec | None
    lambda_spline: Callable[[float], np.ndarray] | None
    logdet_spline: Callable[[float], float] | None

    @property
    def psi_grid(self) -> np.ndarray:
        return np.array([p.psi for p in self.points])

    def log_det_j_ll_at(self, psi: float) -> float:
        if self.logdet_spline is None:
            return 0.0
        return float(self.logdet_spline(psi))

    def theta_at(self, psi: float) -> np.ndarray:
        """Natural-scale (psi, lambda_hat_psi) with lambda interpolated."""
        if self.lambda_spline is None:
            return np.array([psi])
        lam = np.atleast_1d(np.asarray(self.lambda_spline(psi), dtype=float))
        return np.insert(lam, self.psi_index, psi)


def _safe_loglik(model: ModelSpec, theta_natural: np.ndarray) -> float:
    if not model.transform.in_domain(theta_natural):
        return -np.inf
    try:
        val = model.loglik(theta_natural)
    except (ValidationError, FloatingPointError, OverflowError):
        return -np.inf
    return val if np.isfinite(val) else -np.inf


def _dnat_dwork(kinds: tuple[str, ...], natural: np.ndarray) -> np.ndarray:
    """d(theta)/d(working) per coordinate, evaluated on the natural scale."""
    out = np.ones_like(natural)
    for i, k in enumerate(kinds):
        if k == "log":
            out[i] = natural[i]
        elif k == "logit":
            out[i] = natural[i] * (1.0 - natural[i])
    return out


def _maximize_newton(
    neg: Callable[[np.ndarray], float],
    jac: Callable[[np.ndarray], np.ndarray],
    w0: np.ndarray,
) -> tuple[np.ndarray, float] | None:
    """Damped Newton from a warm start; None when it fails to converge.

    Much cheaper than BFGS for the constrained refits along a profile
    sweep, where consecutive solutions are close and an analytic score is
    available. Indefinite curvature is handled by Levenberg shifts,
    non-improving steps by Armijo backtracking.
    """
    x = np.asarray(w0, dtype=float).copy()
    f = neg(x)
    if not np.isfinite(f):
        return None
    eye = np.eye(x.size)
    for _ in range(50):
        g = jac(x)
        if not np.all(np.isfinite(g)):
            return None
        if np.max(np.abs(g)) <= 1e-9 * max(1.0, abs(f)):
            return x, float(f)
        hess = nd.hessian_from_grad(jac, x)
        shift = 0.0
        step = None
        for _ in range(10):
            try:
                np.linalg.cholesky(hess + shift * eye)
                step = np.linalg.solve(hess + shift * eye, -g)
                break
            except np.linalg.LinAlgError:
                shift = 1e-6 if shift == 0.0 else shift * 10.0
        if step is None:
            return None
        slope = float(g @ step)
        t, f_new = 1.0, np.inf
        for _ in range(30):
            f_new = neg(x + t * step)
            if np.isfinite(f_new) and f_new <= f + 1e-4 * t * slope:
                break
            t *= 0.5
        else:
            return None
        x = x + t * step
        f = f_new
    return None


def _maximize(
    neg: Callable[[np.ndarray], float],
    jac: Callable[[np.ndarray], np.ndarray],
    w0: np.ndarray,
    what: str,
) -> tuple[np.ndarray, float]:
    """BFGS with jittered restarts; convergence is our own relative gradient
    criterion, not scipy's status flag."""
    rng = np.random.default_rng(20230817)
    best = None
    w_try = np.asarray(w0, dtype=float)
    for attempt in range(_RESTARTS + 1):
        res = minimize(neg, w_try, jac=jac, method="BFGS",
                       options={"gtol": 1e-9, "maxiter": _MAXITER})
        gnorm = float(np.max(np.abs(jac(res.x))))
        if best is None or res.fun < best[1]:
            best = (res.x, float(res.fun), gnorm)
        if gnorm <= 1e-6 * max(1.0, abs(res.fun)):
            return res.x, float(res.fun)
        w_try = w0 + rng.normal(scale=0.5, size=w0.size) * (1.0 + np.abs(w0))
    x, fun, gnorm = best
    if gnorm <= 1e-6 * max(1.0, abs(fun)):
        return x, fun
    raise FitError(
        f"{what}: no convergence after {_RESTARTS} restarts "
        f"(gradient norm {gnorm:.3g}, loglik {-fun:.6g})"
    )


def fit_mle(model: ModelSpec, start: np.ndarray | None = None) -> FitResult:
    """Maximize the log-likelihood and compute natural-scale observed
    information by central finite differences of the gradient."""
    start_nat = model.start if start is None else np.asarray(start, dtype=float)
    if start_nat is None:
        raise ValidationError(f"model {model.name} has no default start point")
    if not np.isfinite(_safe_loglik(model, start_nat)):
        raise ValidationError(f"model {model.name}: loglik not finite at the start point")
    w0 = model.transform.to_working(start_nat)
    kinds = model.transform.kinds

    def neg(w: np.ndarray) -> float:
        return -_safe_loglik(model, model.transform.to_natural(w))

    if model.score is not None:
        def jac(w: np.ndarray) -> np.ndarray:
            natural = model.transform.to_natural(w)
            return -(np.asarray(model.score(natural)) * _dnat_dwork(kinds, natural))
    else:
        def jac(w: np.ndarray) -> np.ndarray:
            return nd.gradient(neg, w)

    w_hat, neg_max = _maximize(neg, jac, w0, f"fit_mle({model.name})")
    theta_nat = model.transform.to_natural(w_hat)

    if model.score is not None:
        H = nd.hessian_from_grad(model.score, theta_nat)
    else:
        H = nd.hessian(lambda th: _safe_loglik(model, th), theta_nat)
    obs_info = -0.5 * (H + H.T)
    try:
        np.linalg.cholesky(obs_info)
    except np.linalg.LinAlgError:
        raise FitError(
            f"fit_mle({model.name}): observed information is not positive definite; "
            "the likelihood has no regular interior maximum"
        ) from None
    se = np.sqrt(np.diag(np.linalg.inv(obs_info)))
    return FitResult(
        theta_hat=w_hat,
        theta_hat_natural=theta_nat,
        loglik_max=-neg_max,
        obs_info=obs_info,
        se=se,
    )


def fit_constrained(
    model: ModelSpec,
    psi_index: int,
    psi: float,
    warm_start: np.ndarray | None = None,
) -> ProfilePoint:
    """Maximize over the nuisance block with coordinate psi_index fixed.

    warm_start is the natural-scale nuisance vector to start from; the
    model's default start is used when absent.
    """
    lo, hi = model.transform.bounds(psi_index)
    if not lo < psi < hi:
        raise ValidationError(f"psi={psi} outside the domain ({lo}, {hi})")
    d = model.dim
    if d == 1:
        ell = _safe_loglik(model, np.array([psi]))
        return ProfilePoint(
            psi=float(psi),
            lambda_hat_psi=np.empty(0),
            ell_p=ell,
            log_det_j_ll=0.0,
            theta_psi_natural=np.array([float(psi)]),
        )

    mask = np.arange(d) != psi_index
    sub = Transform(tuple(k for i, k in enumerate(model.transform.kinds) if mask[i]))

    def assemble(lam_nat: np.ndarray) -> np.ndarray:
        th = np.empty(d)
        th[psi_index] = psi
        th[mask] = lam_nat
        return th

    warm = (model.start[mask] if warm_start is None else np.asarray(warm_start, dtype=float))
    w0 = sub.to_working(warm)

    def neg(w: np.ndarray) -> float:
        return -_safe_loglik(model, assemble(sub.to_natural(w)))

    if model.score is not None:
        def jac(w: np.ndarray) -> np.ndarray:
            lam = sub.to_natural(w)
            g = np.asarray(model.score(assemble(lam)))[mask]
            return -(g * _dnat_dwork(sub.kinds, lam))
    else:
        def jac(w: np.ndarray) -> np.ndarray:
            return nd.gradient(neg, w)

    solved = _maximize_newton(neg, jac, w0) if model.score is not None else None
    if solved is None:
        solved = _maximize(neg, jac, w0, f"fit_constrained({model.name}, psi={psi:.6g})")
    w_hat, neg_max = solved
    lam_nat = sub.to_natural(w_hat)

    if model.score is not None:
        H = nd.hessian_from_grad(
            lambda lam: np.asarray(model.score(assemble(lam)))[mask], lam_nat
        )
    else:
        H = nd.hessian(lambda lam: _safe_loglik(model, assemble(lam)), lam_nat)
    j_ll = -0.5 * (H + H.T)
    try:
        chol = np.linalg.cholesky(j_ll)
    except np.linalg.LinAlgError:
        raise FitError(f"indefinite nuisance information at psi={psi:.6g}") from None
    log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
    return ProfilePoint(
        psi=float(psi),
        lambda_hat_psi=lam_nat,
        ell_p=-neg_max,
        log_det_j_ll=log_det,
        theta_psi_natural=assemble(lam_nat),
    )


def _nuisance_block(obs_info: np.ndarray, psi_index: int) -> np.ndarray:
    mask = np.arange(obs_info.shape[0]) != psi_index
    return obs_info[np.ix_(mask, mask)]


def curve_from_points(
    model: ModelSpec,
    psi_index: int,
    points: list[ProfilePoint],
    fit: FitResult,
    prior: PriorSpec | None = None,
) -> ProfileCurve:
    """Assemble a ProfileCurve from constrained-fit points (sorted by psi)."""
    points = sorted(points, key=lambda p: p.psi)
    psis = np.array([p.psi for p in points])
    if psis.size < 4:
        raise ValidationError("profile curve needs at least 4 grid points")
    if np.any(np.diff(psis) <= 0):
        raise ValidationError("profile grid must be strictly increasing")
    ells = np.array([p.ell_p for p in points])
    bad = np.nonzero(ells > fit.loglik_max + 1e-8)[0]
    if bad.size:
        raise FitError(
            f"profile loglik exceeds the global maximum at psi={psis[bad[0]]:.6g}; "
            "the unconstrained fit is not the maximum"
        )

    spline = CubicSpline(psis, ells)
    prime = spline.derivative()

    if model.dim == 1:
        lam_spline = None
        logdet_spline = None
        j_p_hat = float(fit.obs_info[0, 0])
        log_det_hat = 0.0
    else:
        lam = np.vstack([p.lambda_hat_psi for p in points])
        lam_spline = CubicSpline(psis, lam)
        logdet_spline = CubicSpline(psis, np.array([p.log_det_j_ll for p in points]))
        _, ld_full = np.linalg.slogdet(fit.obs_info)
        _, ld_block = np.linalg.slogdet(_nuisance_block(fit.obs_info, psi_index))
        j_p_hat = float(np.exp(ld_full - ld_block))
        log_det_hat = float(ld_block)

    return ProfileCurve(
        points=tuple(points),
        ell_p_spline=spline,
        ell_p_prime=prime,
        j_p_hat=j_p_hat,
        psi_index=psi_index,
        psi_hat=float(fit.theta_hat_natural[psi_index]),
        loglik_max=fit.loglik_max,
        log_det_j_ll_hat=log_det_hat,
        fit=fit,
        model=model,
        prior=prior,
        lambda_spline=lam_spline,
        logdet_spline=logdet_spline,
    )


def sweep_fits(
    model: ModelSpec,
    psi_index: int,
    grid: np.ndarray,
    fit: FitResult,
    warm_from: dict[float, np.ndarray] | None = None,
) -> list[ProfilePoint]:
    """Constrained fits over a grid, warm-started outward from psi_hat.

    warm_from optionally seeds the chains with nuisance vectors from
    already-fitted neighbouring points (used when a grid is extended).
    """
    psi_hat = fit.theta_hat_natural[psi_index]
    mask = np.arange(model.dim) != psi_index
    lam_hat = fit.theta_hat_natural[mask]
    grid = np.asarray(grid, dtype=float)
    out: list[ProfilePoint] = []
    for side in (grid[grid >= psi_hat], grid[grid < psi_hat][::-1]):
        warm = lam_hat
        if warm_from and side.size:
            # continue from the closest previously fitted point, if any
            prev = [p for p in warm_from if (p - psi_hat) * (side[0] - psi_hat) > 0]
            if prev:
                warm = warm_from[min(prev, key=lambda p: abs(p - side[0]))]
        for psi in side:
            try:
                pt = fit_constrained(model, psi_index, float(psi), warm_start=warm)
            except FitError as exc:
                raise FitError(f"constrained fit failed at psi={psi:.6g}: {exc}") from exc
            out.append(pt)
            warm = pt.lambda_hat_psi
    return out


def build_profile(
    model: ModelSpec,
    psi_index: int,
    grid: np.ndarray,
    prior: PriorSpec | None = None,
    fit: FitResult | None = None,
) -> ProfileCurve:
    """Profile log-likelihood over an increasing grid of psi values."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 4:
        raise ValidationError("grid must be a 1-d array with at least 4 points")
    if np.any(np.diff(grid) <= 0):
        raise ValidationError("grid must be strictly increasing")
    if fit is None:
        fit = fit_mle(model)
    points = sweep_fits(model, psi_index, grid, fit)
    return curve_from_points(model, psi_index, points, fit, prior)
