"""Virtual spectral filtering of wavelength-resolved polarizer scans.

A filtered scan weights every pixel's scan by the intensity transmissions of
both arm filters, ``C(a2) = sum c(l1, l2, a2) f1(l1) f2(l2)``, and is then
fitted like a measured scan.
"""

from dataclasses import dataclass
import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .analysis import PolarizerScan, fit_sinusoid
from .exceptions import InconsistentInputsError, InfeasibleError, ValidationError


@dataclass(frozen=True)
class FilterProfile:
    kind: str
    center: float = math.nan
    fwhm: float = math.nan
    wavelengths: tuple = ()
    transmission: tuple = ()

    def __post_init__(self):
        if self.kind == "lorentzian":
            if not (math.isfinite(self.center) and self.fwhm > 0 and math.isfinite(self.fwhm)):
                raise ValidationError("a Lorentzian filter needs a finite center and fwhm > 0")
        elif self.kind == "tabulated":
            wl = np.asarray(self.wavelengths, dtype=float)
            tr = np.asarray(self.transmission, dtype=float)
            if wl.ndim != 1 or wl.shape != tr.shape or wl.size < 1:
                raise ValidationError("tabulated filter needs matching 1-D wavelength/transmission arrays")
            if np.any(np.diff(wl) <= 0):
                raise ValidationError("tabulated wavelengths must be strictly increasing")
            if np.any(tr < 0) or np.any(tr > 1):
                raise ValidationError("transmissions must lie in [0, 1]")
        else:
            raise ValidationError(f"unknown filter kind {self.kind!r}")

    @classmethod
    def lorentzian(cls, center, fwhm):
        return cls("lorentzian", float(center), float(fwhm))

    @classmethod
    def tabulated(cls, wavelengths, transmission):
        return cls("tabulated", wavelengths=tuple(map(float, wavelengths)), transmission=tuple(map(float, transmission)))

    @classmethod
    def all_pass(cls):
        """Unit transmission over any optical wavelength."""
        return cls.tabulated([0.0, 1e9], [1.0, 1.0])

    def __call__(self, wavelength):
        wavelength = np.asarray(wavelength, dtype=float)
        if self.kind == "lorentzian":
            return 1.0 / (1.0 + (2.0 * (wavelength - self.center) / self.fwhm) ** 2)
        # zero transmission outside the tabulated range
        return np.interp(wavelength, self.wavelengths, self.transmission, left=0.0, right=0.0)

    def to_dict(self):
        if self.kind == "lorentzian":
            return {"kind": "lorentzian", "center_nm": self.center, "fwhm_nm": self.fwhm}
        return {"kind": "tabulated", "wavelength_nm": list(self.wavelengths), "transmission": list(self.transmission)}

    @classmethod
    def from_dict(cls, d):
        kind = d.get("kind")
        if kind == "lorentzian":
            return cls.lorentzian(d["center_nm"], d["fwhm_nm"])
        if kind == "tabulated":
            return cls.tabulated(d["wavelength_nm"], d["transmission"])
        if kind == "all_pass":
            return cls.all_pass()
        raise ValidationError(f"unknown filter kind {kind!r}")


def filtered_scan(cube, f1, f2):
    """Filter-weighted aggregate scan of a :class:`~spdcmap.simulate.ScanCube`.

    Counts in the returned scan are real-valued effective counts.
    """
    w1 = f1(cube.grid.axis1)
    w2 = f2(cube.grid.axis2)
    if w1.shape != (cube.grid.shape[0],) or w2.shape != (cube.grid.shape[1],):
        raise ValidationError("filter transmissions do not match the cube grid")
    weights = np.outer(w1, w2)
    # np.sum reduces pairwise in a fixed order: results are run-to-run identical
    C = np.sum(cube.values * weights[..., None], axis=(0, 1))
    return PolarizerScan(cube.alpha1, cube.alpha2, C, cube.integration_s)


@dataclass(frozen=True)
class TradeoffCurve:
    fwhm: np.ndarray
    visibility: np.ndarray
    normalized_rate: np.ndarray
    rate: np.ndarray

    def rows(self):
        return list(zip(self.fwhm.tolist(), self.visibility.tolist(), self.normalized_rate.tolist()))


def tradeoff_curve(cube, center, fwhm_list):
    """Visibility and normalized pair rate for identical Lorentzians on both arms."""
    fwhm = np.asarray(fwhm_list, dtype=float)
    if fwhm.ndim != 1 or fwhm.size == 0:
        raise ValidationError("fwhm_list must be a non-empty 1-D list")
    if np.any(np.diff(fwhm) <= 0):
        raise ValidationError("fwhm_list must be strictly increasing")
    V = np.empty_like(fwhm)
    rate = np.empty_like(fwhm)
    for k, width in enumerate(fwhm):
        f = FilterProfile.lorentzian(center, width)
        fit = fit_sinusoid(filtered_scan(cube, f, f))
        V[k] = fit.visibility
        rate[k] = fit.offset
    return TradeoffCurve(fwhm, V, rate / rate[-1], rate)


def mix_flat_background(visibility, rho):
    """Visibility after adding a polarization-independent floor of fraction ``rho``."""
    return visibility * (1.0 - rho)


def correct_fourphoton(v_measured, rho, tol=1e-9):
    """Remove a flat, polarization-uncorrelated background of fraction ``rho``."""
    if not 0.0 <= v_measured <= 1.0:
        raise ValidationError(f"measured visibility must lie in [0, 1], got {v_measured}")
    if not 0.0 <= rho < 1.0:
        raise ValidationError(f"background fraction must lie in [0, 1), got {rho}")
    corrected = v_measured / (1.0 - rho)
    if corrected > 1.0 + tol:
        raise InconsistentInputsError(
            f"corrected visibility {corrected:.6g} exceeds 1; background fraction too large"
        )
    return corrected


def optimize_filter(curve, v_min=None, exponent=None):
    """Best scanned bandwidth under one figure of merit.

    Exactly one of ``v_min`` (maximize rate subject to ``V >= v_min``) and
    ``exponent`` (maximize ``rate * V**exponent``) must be given. Ties go to
    the larger bandwidth.
    """
    if (v_min is None) == (exponent is None):
        raise ValidationError("give exactly one of v_min or exponent")
    if curve.fwhm.size == 0:
        raise ValidationError("empty tradeoff curve")
    if v_min is not None:
        feasible = curve.visibility >= v_min
        if not feasible.any():
            raise InfeasibleError(f"no scanned bandwidth reaches V >= {v_min}")
        merit = np.where(feasible, curve.normalized_rate, -np.inf)
    else:
        if not exponent > 0:
            raise ValidationError("exponent must be > 0")
        merit = curve.normalized_rate * np.clip(curve.visibility, 0.0, None) ** exponent
    best = np.flatnonzero(merit == merit.max())[-1]
    return float(curve.fwhm[best])


class BandwidthSelector(BaseEstimator):
    """Scan a common Lorentzian bandwidth on both arms and pick the best one.

    ``fit`` takes a :class:`~spdcmap.simulate.ScanCube` and stores the
    tradeoff curve in ``curve_`` and the chosen bandwidth in ``best_fwhm_``.
    """

    def __init__(self, center_nm=780.0, fwhm_nm=(0.5, 1, 2, 3, 5, 8, 10, 15), v_min=None, exponent=None):
        self.center_nm = center_nm
        self.fwhm_nm = fwhm_nm
        self.v_min = v_min
        self.exponent = exponent

    def fit(self, X, y=None):
        self.curve_ = tradeoff_curve(X, self.center_nm, self.fwhm_nm)
        self.best_fwhm_ = optimize_filter(self.curve_, v_min=self.v_min, exponent=self.exponent)
        best = int(np.flatnonzero(self.curve_.fwhm == self.best_fwhm_)[0])
        self.best_visibility_ = float(self.curve_.visibility[best])
        self.best_normalized_rate_ = float(self.curve_.normalized_rate[best])
        return self

    def transform(self, X):
        """Aggregate scan of ``X`` behind the selected filters."""
        check_is_fitted(self, "best_fwhm_")
        f = FilterProfile.lorentzian(self.center_nm, self.best_fwhm_)
        return filtered_scan(X, f, f)
