"""Gaussian joint-spectrum model of a single SPDC decay path.

The joint spectrum of the H1V2 path is modeled as

    g(l1, l2) = A * exp(-1/2 [d1^2/s1^2 + d2^2/s2^2 + d1*d2/s12])

with ``d = l - l_center``. The cross term carries ``s12`` (nm^2) directly in
the denominator; a positive ``s12`` gives anti-correlated wavelengths along
the energy-conservation diagonal. The V1H2 path is obtained with
:func:`mirror_path`.
"""

from dataclasses import dataclass, field, replace
import math

import numpy as np

from .exceptions import DegenerateMarginalError, UndefinedStateError, ValidationError

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))

MAP_KINDS = ("rate", "counts", "visibility", "gamma_deg", "entropy_bits")
MAP_UNITS = {
    "rate": "1/s",
    "counts": "counts",
    "visibility": "1",
    "gamma_deg": "deg",
    "entropy_bits": "bit",
}


@dataclass(frozen=True)
class GaussianJointModel:
    lambda1_center: float
    lambda2_center: float
    sigma1: float
    sigma2: float
    sigma12: float
    amplitude: float = 1.0

    def problems(self):
        """List of violated invariants (empty when the model is valid)."""
        out = []
        for name in ("lambda1_center", "lambda2_center", "sigma1", "sigma2", "amplitude"):
            if not math.isfinite(getattr(self, name)):
                out.append(f"{name} must be finite")
        if math.isnan(self.sigma12):
            out.append("sigma12 must not be NaN")
        if not self.sigma1 > 0:
            out.append(f"sigma1 must be > 0 (got {self.sigma1})")
        if not self.sigma2 > 0:
            out.append(f"sigma2 must be > 0 (got {self.sigma2})")
        if not self.amplitude > 0:
            out.append(f"amplitude must be > 0 (got {self.amplitude})")
        if self.sigma12 == 0:
            out.append("sigma12 must be non-zero")
        elif not 4.0 * self.sigma12**2 > (self.sigma1 * self.sigma2) ** 2:
            out.append(
                "quadratic form is not positive definite: "
                f"4*sigma12^2 = {4.0 * self.sigma12**2:.6g} <= "
                f"(sigma1*sigma2)^2 = {(self.sigma1 * self.sigma2) ** 2:.6g}"
            )
        return out

    @property
    def cross_coefficient(self):
        """``1/sigma12``; zero means uncorrelated arms."""
        return 1.0 / self.sigma12

    def to_dict(self):
        return {
            "lambda1_center_nm": self.lambda1_center,
            "lambda2_center_nm": self.lambda2_center,
            "sigma1_nm": self.sigma1,
            "sigma2_nm": self.sigma2,
            "sigma12_nm2": self.sigma12,
            "amplitude": self.amplitude,
        }

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(
                lambda1_center=float(d["lambda1_center_nm"]),
                lambda2_center=float(d["lambda2_center_nm"]),
                sigma1=float(d["sigma1_nm"]),
                sigma2=float(d["sigma2_nm"]),
                sigma12=float(d["sigma12_nm2"]),
                amplitude=float(d.get("amplitude", 1.0)),
            )
        except KeyError as exc:
            raise ValidationError(f"model is missing key {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"model has a non-numeric field: {exc}") from None


# Fitted H1V2 parameters reported for the femtosecond-pumped BBO source.
PAPER_HV_MODEL = GaussianJointModel(
    lambda1_center=779.77,
    lambda2_center=779.10,
    sigma1=1.265,
    sigma2=1.853,
    sigma12=1.509,
    amplitude=1.0,
)


def validate(model):
    """Raise :class:`ValidationError` listing every violated invariant."""
    problems = model.problems()
    if problems:
        raise ValidationError(problems)
    return model


def gaussian_eval(model, lambda1, lambda2):
    """Evaluate the joint spectrum (events/s). Broadcasts over array inputs."""
    validate(model)
    d1 = np.asarray(lambda1, dtype=float) - model.lambda1_center
    d2 = np.asarray(lambda2, dtype=float) - model.lambda2_center
    q = d1**2 / model.sigma1**2 + d2**2 / model.sigma2**2 + d1 * d2 / model.sigma12
    return model.amplitude * np.exp(-0.5 * q)


def mirror_path(model):
    """Model of the other decay path: wavelengths and widths exchanged."""
    validate(model)
    return replace(
        model,
        lambda1_center=model.lambda2_center,
        lambda2_center=model.lambda1_center,
        sigma1=model.sigma2,
        sigma2=model.sigma1,
    )


def marginal_fwhm(model, arm):
    """FWHM (nm) of the marginal spectrum of ``arm`` (1 or 2).

    The bracket under the square root is positive exactly when the quadratic
    form is positive definite, so a non-definite model is reported as
    :class:`DegenerateMarginalError` rather than a generic validation error.
    """
    if arm == 1:
        own, other = model.sigma1, model.sigma2
    elif arm == 2:
        own, other = model.sigma2, model.sigma1
    else:
        raise ValidationError(f"arm must be 1 or 2, got {arm!r}")
    bracket = 1.0 / own**2 - other**2 * model.cross_coefficient**2 / 4.0
    if not bracket > 0:
        raise DegenerateMarginalError(
            f"marginal of arm {arm} is not a proper Gaussian (bracket = {bracket:.6g})"
        )
    validate(model)
    return FWHM_PER_SIGMA / math.sqrt(bracket)


def path_amplitudes(g_hv, g_vh):
    """Real amplitudes ``(a, b)`` of the H1V2 and V1H2 paths from their rates.

    Works elementwise on arrays. Raises :class:`UndefinedStateError` when
    both rates vanish at any element.
    """
    g_hv = np.asarray(g_hv, dtype=float)
    g_vh = np.asarray(g_vh, dtype=float)
    if np.any(g_hv < 0) or np.any(g_vh < 0):
        raise ValidationError("path rates must be non-negative")
    total = g_hv + g_vh
    if np.any(total <= 0):
        raise UndefinedStateError("both path rates are zero; the polarization state is undefined")
    a = np.sqrt(g_hv / total)
    # sqrt(g_vh/total) rather than sqrt(1 - a^2): exact a == b on the symmetric locus
    b = np.sqrt(g_vh / total)
    if a.ndim == 0:
        return float(a), float(b)
    return a, b


@dataclass(frozen=True)
class WavelengthGrid:
    start1: float
    start2: float
    step1: float
    step2: float
    count1: int
    count2: int

    def __post_init__(self):
        problems = []
        if not (self.step1 > 0 and self.step2 > 0):
            problems.append("grid steps must be > 0")
        if not (int(self.count1) == self.count1 > 0 and int(self.count2) == self.count2 > 0):
            problems.append("grid counts must be positive integers")
        if problems:
            raise ValidationError(problems)

    @property
    def shape(self):
        return (int(self.count1), int(self.count2))

    @property
    def axis1(self):
        return self.start1 + self.step1 * np.arange(self.count1)

    @property
    def axis2(self):
        return self.start2 + self.step2 * np.arange(self.count2)

    def mesh(self):
        """``(L1, L2)`` arrays of shape ``self.shape``, indexed (i, j)."""
        return np.meshgrid(self.axis1, self.axis2, indexing="ij")

    def transpose(self):
        return WavelengthGrid(self.start2, self.start1, self.step2, self.step1, self.count2, self.count1)

    @classmethod
    def centered(cls, center, step, count):
        """Square grid of ``count`` x ``count`` pixels around ``center``."""
        start = center - step * (count - 1) / 2.0
        return cls(start, start, step, step, count, count)

    def to_dict(self):
        return {
            "start1_nm": self.start1,
            "start2_nm": self.start2,
            "step1_nm": self.step1,
            "step2_nm": self.step2,
            "count1": int(self.count1),
            "count2": int(self.count2),
        }

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(
                float(d["start1_nm"]),
                float(d["start2_nm"]),
                float(d["step1_nm"]),
                float(d["step2_nm"]),
                int(d["count1"]),
                int(d["count2"]),
            )
        except KeyError as exc:
            raise ValidationError(f"grid is missing key {exc.args[0]!r}") from None


@dataclass
class SpectralMap:
    """Values on a wavelength grid. Masked pixels are stored as NaN."""

    grid: WavelengthGrid
    values: np.ndarray
    kind: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        problems = []
        if self.kind not in MAP_KINDS:
            problems.append(f"unknown map kind {self.kind!r}")
        if self.values.shape != self.grid.shape:
            problems.append(f"values shape {self.values.shape} does not match grid {self.grid.shape}")
        finite = self.values[np.isfinite(self.values)]
        if self.kind == "counts" and (np.any(finite < 0) or np.any(finite != np.round(finite))):
            problems.append("counts must be non-negative integers")
        if self.kind == "rate" and np.any(finite < 0):
            problems.append("rates must be non-negative")
        if self.kind in ("visibility", "entropy_bits") and (
            np.any(finite < -1e-12) or np.any(finite > 1 + 1e-12)
        ):
            problems.append(f"{self.kind} values must lie in [0, 1]")
        if problems:
            raise ValidationError(problems)
        self.metadata.setdefault("units", MAP_UNITS.get(self.kind))

    @property
    def mask(self):
        """True where the pixel is masked."""
        return ~np.isfinite(self.values)

    def transpose(self):
        """Map with the two wavelength axes exchanged."""
        return SpectralMap(self.grid.transpose(), self.values.T.copy(), self.kind, dict(self.metadata))

    def sidecar(self):
        meta = {"kind": self.kind, "grid": self.grid.to_dict()}
        meta.update(self.metadata)
        return meta
