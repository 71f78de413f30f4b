"""Inverse problem: sinusoid fits of polarizer scans, 2D Gaussian fits of
joint spectra, and the visibility / gamma / entropy maps built from them."""

from dataclasses import dataclass, field
import math
import warnings

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_angles, check_targets, check_wavelength_pairs
from .exceptions import FitError, ValidationError
from .polarization import entropy_bits
from .simulate import sample_cube
from .spectral_model import GaussianJointModel, SpectralMap, path_amplitudes

# Relative modulation below which a scan counts as unmodulated.
_FLAT_RTOL = 1e-12


# --------------------------------------------------------------------------
# sinusoid fits


@dataclass(frozen=True)
class PolarizerScan:
    alpha1: float
    alpha2: np.ndarray
    counts: np.ndarray
    integration_s: np.ndarray

    def __init__(self, alpha1, alpha2, counts, integration_s=1.0):
        alpha2 = np.asarray(alpha2, dtype=float)
        counts = np.asarray(counts, dtype=float)
        t = np.broadcast_to(np.asarray(integration_s, dtype=float), alpha2.shape).copy()
        if counts.shape != alpha2.shape:
            raise ValidationError("counts and alpha2 must have the same length")
        if np.any(counts < 0):
            raise ValidationError("counts must be non-negative")
        if np.any(t <= 0):
            raise ValidationError("integration times must be positive")
        distinct = np.unique(np.round(np.mod(alpha2, 180.0), 9) % 180.0)
        if distinct.size < 3:
            raise ValidationError(
                f"a scan needs at least 3 distinct arm-2 angles modulo 180 deg, got {distinct.size}"
            )
        object.__setattr__(self, "alpha1", float(alpha1))
        object.__setattr__(self, "alpha2", alpha2)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "integration_s", t)

    @property
    def rates(self):
        return self.counts / self.integration_s

    def poisson_weights(self):
        """Inverse variance of each rate sample, counts floored at 1."""
        return self.integration_s**2 / np.maximum(self.counts, 1.0)


@dataclass(frozen=True)
class VisibilityFit:
    """Sinusoid fit result. ``offset`` is the mean coincidence rate (1/s)."""

    offset: float
    visibility: float
    gamma: float
    offset_err: float
    visibility_err: float
    gamma_err: float
    gamma_defined: bool = True

    def to_dict(self):
        return {
            "offset": self.offset,
            "visibility": self.visibility,
            "gamma_deg": self.gamma if self.gamma_defined else None,
            "offset_err": self.offset_err,
            "visibility_err": self.visibility_err,
            "gamma_err_deg": self.gamma_err if self.gamma_defined else None,
            "gamma_defined": self.gamma_defined,
        }


def _sinusoid_design(alpha2_deg):
    t = np.deg2rad(2.0 * np.asarray(alpha2_deg, dtype=float))
    return np.stack([np.ones_like(t), np.cos(t), np.sin(t)], axis=-1)


def _solve_sinusoid(alpha2_deg, y, w):
    """Batched weighted linear solve in the {1, cos 2a, sin 2a} basis.

    ``y`` and ``w`` have shape ``(..., n)``. Returns coefficients ``(..., 3)``
    and their covariance ``(..., 3, 3)`` taking ``w`` as inverse variances.
    """
    A = _sinusoid_design(alpha2_deg)
    normal = np.einsum("ni,...n,nj->...ij", A, w, A)
    rhs = np.einsum("ni,...n->...i", A, w * y)
    cov = np.linalg.inv(normal)
    coef = np.linalg.solve(normal, rhs[..., None])[..., 0]
    return coef, cov


def _visibility_and_gamma(coef, cov):
    """V, gamma (deg) and first-order 1-sigma errors; batched."""
    p0, p1, p2 = coef[..., 0], coef[..., 1], coef[..., 2]
    r = np.hypot(p1, p2)
    flat = r <= _FLAT_RTOL * np.abs(p0)
    with np.errstate(divide="ignore", invalid="ignore"):
        V = np.where(flat, 0.0, r / p0)
        g = np.stack([-r / p0**2, p1 / (r * p0), p2 / (r * p0)], axis=-1)
        var_v = np.einsum("...i,...ij,...j->...", g, cov, g)
        var_flat = 0.5 * (cov[..., 1, 1] + cov[..., 2, 2]) / p0**2
        var_v = np.where(flat, var_flat, var_v)
        h = np.stack([np.zeros_like(r), -0.5 * p2 / r**2, 0.5 * p1 / r**2], axis=-1)
        var_g = np.einsum("...i,...ij,...j->...", h, cov, h)
    gamma = 0.5 * np.degrees(np.arctan2(p2, p1))
    gamma = np.where(gamma <= -90.0, gamma + 180.0, gamma)
    gamma = np.where(flat, np.nan, gamma)
    gamma_err = np.where(flat, np.nan, np.degrees(np.sqrt(np.abs(var_g))))
    return V, np.sqrt(np.abs(var_v)), gamma, gamma_err, flat


class SinusoidFit(RegressorMixin, BaseEstimator):
    """Closed-form fit of ``y = p0 + p1 cos 2x + p2 sin 2x`` (x in degrees).

    ``sample_weight`` are inverse variances of ``y``; uncertainties are
    propagated from the weighted normal equations without rescaling.
    """

    def fit(self, X, y, sample_weight=None):
        X = check_angles(X)
        y, sample_weight = check_targets(X, y, sample_weight)
        if np.unique(np.round(np.mod(X, 180.0), 9) % 180.0).size < 3:
            raise ValidationError("need at least 3 distinct angles modulo 180 deg")
        w = np.ones_like(y) if sample_weight is None else sample_weight
        coef, cov = _solve_sinusoid(X, y, w)
        if not coef[0] > 0:
            raise FitError(f"fitted offset is not positive ({coef[0]:.6g})")
        self.coef_ = coef
        self.covariance_ = cov
        V, V_err, gamma, gamma_err, flat = _visibility_and_gamma(coef, cov)
        self.visibility_ = float(V)
        self.visibility_err_ = float(V_err)
        self.gamma_ = float(gamma)
        self.gamma_err_ = float(gamma_err)
        self.gamma_defined_ = not bool(flat)
        self.residual_ = float(np.sum(w * (y - _sinusoid_design(X) @ coef) ** 2))
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return _sinusoid_design(check_angles(X)) @ self.coef_

    def to_visibility_fit(self):
        check_is_fitted(self, "coef_")
        return VisibilityFit(
            offset=float(self.coef_[0]),
            visibility=self.visibility_,
            gamma=self.gamma_,
            offset_err=float(math.sqrt(self.covariance_[0, 0])),
            visibility_err=self.visibility_err_,
            gamma_err=self.gamma_err_,
            gamma_defined=self.gamma_defined_,
        )


def fit_sinusoid(scan):
    """Fit a polarizer scan with Poisson weights; returns :class:`VisibilityFit`."""
    est = SinusoidFit().fit(scan.alpha2, scan.rates, sample_weight=scan.poisson_weights())
    return est.to_visibility_fit()


# --------------------------------------------------------------------------
# 2D Gaussian fits


@dataclass
class GaussianFitReport:
    model: GaussianJointModel
    errors: dict
    n_iter: int
    chi2: float
    n_pixels: int
    converged: bool = True
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        out = {
            "converged": self.converged,
            "parameters": self.model.to_dict(),
            "uncertainties": dict(self.errors),
            "iterations": self.n_iter,
            "residual_chi2": self.chi2,
            "n_pixels": self.n_pixels,
        }
        out.update(self.extra)
        return out


def _model_and_jacobian(theta, x1, x2):
    """Model values and Jacobian for theta = (l1, l2, s1, s2, kappa, amp)."""
    l1, l2, s1, s2, kappa, amp = theta
    d1, d2 = x1 - l1, x2 - l2
    f = amp * np.exp(-0.5 * (d1**2 / s1**2 + d2**2 / s2**2 + kappa * d1 * d2))
    J = np.empty((x1.size, 6))
    J[:, 0] = f * (d1 / s1**2 + 0.5 * kappa * d2)
    J[:, 1] = f * (d2 / s2**2 + 0.5 * kappa * d1)
    J[:, 2] = f * d1**2 / s1**3
    J[:, 3] = f * d2**2 / s2**3
    J[:, 4] = -0.5 * f * d1 * d2
    J[:, 5] = f / amp
    return f, J


def _admissible(theta):
    l1, l2, s1, s2, kappa, amp = theta
    return np.all(np.isfinite(theta)) and s1 > 0 and s2 > 0 and amp > 0 and 4.0 > (kappa * s1 * s2) ** 2


class GaussianJointFit(RegressorMixin, BaseEstimator):
    """Damped least-squares fit of the joint-spectrum Gaussian.

    ``X`` holds wavelength pairs (n, 2), ``y`` counts or rates. The start
    point comes from a weighted quadratic fit to ``log(y)`` over samples with
    ``y >= min_counts``. Refinement is damped Gauss-Newton on the
    untransformed model.

    Parameters
    ----------
    max_iter : int
        Iteration cap of the damped refinement.
    tol : float
        Relative parameter change that counts as converged.
    min_counts : float
        Threshold for samples used in the log-quadratic initialization.
    damping : float
        Initial damping factor; multiplied by 10 on a rejected step and
        divided by 10 on an accepted one.
    weighting : {"poisson", "data"}
        ``"poisson"`` weights each sample by the inverse model variance
        ``1/f`` re-evaluated every iteration and accepts steps on the Poisson
        deviance, which converges to the Poisson maximum-likelihood estimate.
        ``"data"`` uses fixed weights ``1/max(y, 1)`` (or ``sample_weight``)
        and plain chi-square.
    """

    def __init__(self, max_iter=200, tol=1e-8, min_counts=5.0, damping=1e-3, weighting="poisson"):
        self.max_iter = max_iter
        self.tol = tol
        self.min_counts = min_counts
        self.damping = damping
        self.weighting = weighting

    def _initial_guess(self, x1, x2, y):
        use = y >= self.min_counts
        if use.sum() < 6:
            raise FitError(f"only {int(use.sum())} samples reach {self.min_counts} counts; need 6")
        u1, u2 = x1[use], x2[use]
        c1, c2 = u1.mean(), u2.mean()
        u1, u2 = u1 - c1, u2 - c2
        A = np.stack([np.ones_like(u1), u1, u2, u1**2, u2**2, u1 * u2], axis=1)
        sw = np.sqrt(y[use])
        coef, *_ = np.linalg.lstsq(A * sw[:, None], np.log(y[use]) * sw, rcond=None)
        # log y = k0 + k1 u1 + k2 u2 - (P u1^2 + Q u2^2 + R u1 u2) / 2
        P, Q, R = -2.0 * coef[3], -2.0 * coef[4], -2.0 * coef[5]
        if not (P > 0 and Q > 0 and 4.0 * P * Q > R**2):
            raise FitError("log-quadratic initialization is not a decaying Gaussian")
        M = np.array([[P, R / 2.0], [R / 2.0, Q]])
        center = np.linalg.solve(M, coef[1:3])
        logamp = coef[0] + coef[1:3] @ center - 0.5 * center @ M @ center
        return np.array([c1 + center[0], c2 + center[1], 1 / math.sqrt(P), 1 / math.sqrt(Q), R, math.exp(logamp)])

    def fit(self, X, y, sample_weight=None):
        if self.weighting not in ("poisson", "data"):
            raise ValidationError(f"unknown weighting {self.weighting!r}")
        X = check_wavelength_pairs(X)
        y, sample_weight = check_targets(X, y, sample_weight, allow_nan=True)
        finite = np.isfinite(y)
        x1, x2, y = X[finite, 0], X[finite, 1], y[finite]
        poisson = self.weighting == "poisson" and sample_weight is None
        if poisson and np.any(y < 0):
            raise ValidationError("Poisson weighting needs non-negative data")
        if poisson:
            ylogy = np.sum(y[y > 0] * np.log(y[y > 0]))

            def weights(f):
                return 1.0 / np.maximum(f, np.finfo(float).tiny)

            def objective(f):
                # Poisson deviance
                with np.errstate(divide="ignore"):
                    return 2.0 * float(ylogy - np.sum(y[y > 0] * np.log(f[y > 0])) - np.sum(y - f))
        else:
            fixed = 1.0 / np.maximum(y, 1.0) if sample_weight is None else sample_weight[finite]

            def weights(f):
                return fixed

            def objective(f):
                return float(np.sum(fixed * (y - f) ** 2))

        theta = self._initial_guess(x1, x2, y)
        f, J = _model_and_jacobian(theta, x1, x2)
        loss = objective(f)
        mu = self.damping
        converged = False
        n_iter = 0
        while n_iter < self.max_iter:
            n_iter += 1
            JtW = J.T * weights(f)
            H = JtW @ J
            grad = JtW @ (y - f)
            while True:
                step = np.linalg.solve(H + mu * np.diag(np.diag(H)), grad)
                trial = theta + step
                small = np.all(np.abs(step) <= self.tol * np.maximum(np.abs(theta), 1e-12))
                if _admissible(trial):
                    f_t, J_t = _model_and_jacobian(trial, x1, x2)
                    loss_t = objective(f_t)
                    if loss_t <= loss:
                        theta, f, J, loss = trial, f_t, J_t, loss_t
                        mu = max(mu / 10.0, 1e-12)
                        break
                if small or mu > 1e16:
                    # no admissible downhill step remains: at the minimum
                    break
                mu *= 10.0
            if small or loss == 0.0:
                converged = True
                break
        if not converged:
            raise FitError(f"damped least squares did not converge in {self.max_iter} iterations")

        JtW = J.T * weights(f)
        cov = np.linalg.inv(JtW @ J)
        l1, l2, s1, s2, kappa, amp = theta
        model = GaussianJointModel(l1, l2, s1, s2, 1.0 / kappa if kappa != 0 else math.inf, amp)
        problems = model.problems()
        if problems:
            raise FitError("fitted model is invalid: " + "; ".join(problems))
        err = np.sqrt(np.abs(np.diag(cov)))
        self.theta_ = theta
        self.covariance_ = cov
        self.model_ = model
        self.errors_ = {
            "lambda1_center_nm": float(err[0]),
            "lambda2_center_nm": float(err[1]),
            "sigma1_nm": float(err[2]),
            "sigma2_nm": float(err[3]),
            "sigma12_nm2": float(err[4] / kappa**2) if kappa != 0 else math.inf,
            "amplitude": float(err[5]),
        }
        self.n_iter_ = n_iter
        self.loss_ = loss
        self.chi2_ = float(np.sum((y - f) ** 2 * weights(f)))
        self.n_samples_fit_ = int(y.size)
        return self

    def predict(self, X):
        check_is_fitted(self, "theta_")
        X = check_wavelength_pairs(X)
        f, _ = _model_and_jacobian(self.theta_, X[:, 0], X[:, 1])
        return f


def fit_gaussian2d(counts, **params):
    """Fit a count (or rate) map; returns a :class:`GaussianFitReport`."""
    if counts.kind not in ("counts", "rate"):
        raise ValidationError(f"cannot fit a map of kind {counts.kind!r}")
    L1, L2 = counts.grid.mesh()
    X = np.column_stack([L1.ravel(), L2.ravel()])
    if counts.kind == "rate":
        # rates carry no count scale; initialize from the upper part of the map
        params.setdefault("min_counts", 5e-3 * float(np.nanmax(counts.values)))
    est = GaussianJointFit(**params).fit(X, counts.values.ravel())
    return GaussianFitReport(est.model_, est.errors_, est.n_iter_, est.chi2_, est.n_samples_fit_)


# --------------------------------------------------------------------------
# maps


def fit_cube(cube):
    """Pixelwise Poisson-weighted sinusoid fits of a :class:`ScanCube`.

    Returns ``(V, V_err, gamma, gamma_err, offset)`` arrays; pixels without a
    positive offset are NaN.
    """
    counts = cube.values
    t = cube.integration_s
    y = counts / t
    w = t**2 / np.maximum(counts, 1.0)
    coef, cov = _solve_sinusoid(cube.alpha2, y, w)
    V, V_err, gamma, gamma_err, _ = _visibility_and_gamma(coef, cov)
    bad = ~(coef[..., 0] > 0)
    out = []
    for arr in (V, V_err, gamma, gamma_err, coef[..., 0]):
        arr = np.array(arr, dtype=float)
        arr[bad] = np.nan
        out.append(arr)
    return tuple(out)


def visibility_gamma_maps(config, grid, alpha2_list, integration_s, seed=None, max_visibility_error=0.11):
    """Simulate per-pixel scans at alpha1 = 45 deg and fit them.

    Pixels whose visibility uncertainty exceeds ``max_visibility_error`` are
    masked (NaN). Visibilities are clipped to [0, 1].
    """
    cube = sample_cube(config, grid, alpha2_list, integration_s, seed)
    V, V_err, gamma, _, _ = fit_cube(cube)
    masked = ~(V_err <= max_visibility_error) | ~np.isfinite(V)
    V = np.clip(V, 0.0, 1.0)
    V[masked] = np.nan
    gamma[masked] = np.nan
    meta = {
        "analyzer_deg": [45.0, None],
        "alpha2_deg": [float(a) for a in cube.alpha2],
        "integration_s": float(integration_s),
        "seed": cube.metadata["seed"],
        "max_visibility_error": float(max_visibility_error),
    }
    if masked.all():
        warnings.warn("every pixel of the visibility map is masked", stacklevel=2)
    return SpectralMap(grid, V, "visibility", dict(meta)), SpectralMap(grid, gamma, "gamma_deg", dict(meta))


def entropy_map(map_hv, map_vh, mask_threshold=0.0):
    """Entanglement entropy per pixel from the two decay-path maps.

    Pixels whose combined value is below ``mask_threshold`` (or zero) are
    masked.
    """
    if map_hv.grid != map_vh.grid:
        raise ValidationError("decay-path maps are not on the same grid")
    for m in (map_hv, map_vh):
        if m.kind not in ("rate", "counts"):
            raise ValidationError(f"entropy needs rate or count maps, got {m.kind!r}")
    g_hv = np.nan_to_num(map_hv.values, nan=0.0)
    g_vh = np.nan_to_num(map_vh.values, nan=0.0)
    total = g_hv + g_vh
    keep = (total >= mask_threshold) & (total > 0) & np.isfinite(map_hv.values) & np.isfinite(map_vh.values)
    S = np.full(total.shape, np.nan)
    if keep.any():
        a, b = path_amplitudes(g_hv[keep], g_vh[keep])
        S[keep] = np.clip(entropy_bits(a, b), 0.0, 1.0)
    else:
        warnings.warn("every pixel of the entropy map is masked", stacklevel=2)
    meta = {"mask_threshold": float(mask_threshold)}
    return SpectralMap(map_hv.grid, S, "entropy_bits", meta)
