"""Forward model: coincidence-rate maps and Poisson count maps."""

from dataclasses import dataclass, field
import math

import numpy as np

from ._validation import check_fraction, check_positive
from .exceptions import ValidationError
from .polarization import AnalyzerSetting, projection_amplitude
from .spectral_model import GaussianJointModel, SpectralMap, gaussian_eval, mirror_path, validate

# Unfiltered pair rate (1/s) and monochromator resolution (nm FWHM) of the
# reference source; used to scale synthetic maps to realistic counts.
TOTAL_PAIR_RATE = 48000.0
MONOCHROMATOR_FWHM = 0.3


@dataclass(frozen=True)
class SourceConfig:
    model_hv: GaussianJointModel
    delta: float = math.pi
    background_fraction: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        validate(self.model_hv)
        check_fraction("background_fraction", self.background_fraction)


def joint_spectrum_integral(model):
    """Integral of ``g / amplitude`` over the wavelength plane (nm^2)."""
    validate(model)
    det = 1.0 / (model.sigma1 * model.sigma2) ** 2 - 0.25 * model.cross_coefficient**2
    return 2.0 * math.pi / math.sqrt(det)


def realistic_peak_rate(model, total_rate=TOTAL_PAIR_RATE, resolution_nm=MONOCHROMATOR_FWHM):
    """Peak per-pixel rate of one decay path seen through two monochromators.

    ``total_rate`` is shared by both decay paths; each arm passes a Gaussian
    band of FWHM ``resolution_nm``. Monochromator losses are ignored, so this
    is an upper bound.
    """
    density = total_rate / (2.0 * joint_spectrum_integral(model))
    band = resolution_nm * math.sqrt(math.pi / (4.0 * math.log(2.0)))
    return density * band**2


def path_rates(model_hv, grid):
    """``(g_hv, g_vh)`` evaluated on the grid."""
    L1, L2 = grid.mesh()
    return gaussian_eval(model_hv, L1, L2), gaussian_eval(mirror_path(model_hv), L1, L2)


def rate_map(config, setting, grid):
    """Coincidence-rate map behind analyzers ``setting`` (AnalyzerSetting)."""
    g_hv, g_vh = path_rates(config.model_hv, grid)
    amp = projection_amplitude(np.sqrt(g_hv), np.sqrt(g_vh), config.delta, setting.alpha1, setting.alpha2)
    rates = amp.real**2 + amp.imag**2
    meta = {"analyzer_deg": [float(setting.alpha1), float(setting.alpha2)]}
    return SpectralMap(grid, rates, "rate", meta)


def pixel_rng(seed, stream, pixel):
    """Independent generator for one pixel; does not depend on visiting order."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(pixel))))


def sample_counts(rates, integration_s, background_fraction=0.0, seed=0, stream=0, reference_rate=None):
    """Poisson-sample a count map from a rate map.

    A flat, analyzer-independent floor ``rho * r_ref / (1 - rho)`` is added to
    every pixel, where ``r_ref`` is ``reference_rate`` or, by default, the map
    average. Each pixel draws from its own substream keyed by
    ``(seed, stream, pixel index)``.
    """
    if rates.kind != "rate":
        raise ValidationError(f"expected a rate map, got kind {rates.kind!r}")
    integration_s = check_positive("integration_s", integration_s)
    rho = check_fraction("background_fraction", background_fraction)
    signal = np.nan_to_num(rates.values, nan=0.0)
    if reference_rate is None:
        reference_rate = float(signal.mean())
    floor = rho * reference_rate / (1.0 - rho)
    means = ((signal + floor) * integration_s).ravel()

    counts = np.zeros(means.size)
    for k, lam in enumerate(means):
        if lam > 0:
            counts[k] = pixel_rng(seed, stream, k).poisson(lam)
    meta = dict(rates.metadata)
    meta.update(integration_s=integration_s, background_fraction=rho, seed=int(seed), stream=int(stream))
    return SpectralMap(rates.grid, counts.reshape(rates.grid.shape), "counts", meta)


@dataclass
class ScanCube:
    """Per-pixel polarizer scans ``c(l1, l2, alpha2)`` at fixed ``alpha1``.

    ``values`` has shape ``grid.shape + (len(alpha2),)``; counts if
    ``integration_s`` is set by a sampler, otherwise expected rates with
    ``integration_s = 1``.
    """

    grid: object
    alpha2: np.ndarray
    values: np.ndarray
    alpha1: float = 45.0
    integration_s: float = 1.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.alpha2 = np.asarray(self.alpha2, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape + (self.alpha2.size,):
            raise ValidationError(
                f"cube shape {self.values.shape} does not match grid {self.grid.shape} "
                f"x {self.alpha2.size} angles"
            )


def expected_cube(config, grid, alpha2_list, alpha1=45.0):
    """Noiseless rate cube (counts per second) for an arm-2 angle scan."""
    alpha2 = np.asarray(alpha2_list, dtype=float)
    layers = [rate_map(config, AnalyzerSetting(alpha1, a2), grid).values for a2 in alpha2]
    return ScanCube(grid, alpha2, np.stack(layers, axis=-1), alpha1=alpha1)


def sample_cube(config, grid, alpha2_list, integration_s, seed=None, alpha1=45.0):
    """Poisson count cube; one RNG stream per angle, one substream per pixel.

    The background floor is referenced to the scan-averaged signal rate so it
    is identical at every analyzer angle.
    """
    seed = config.rng_seed if seed is None else seed
    rates = expected_cube(config, grid, alpha2_list, alpha1)
    reference = float(rates.values.mean())
    layers = []
    for k, a2 in enumerate(rates.alpha2):
        layer = SpectralMap(grid, rates.values[..., k], "rate")
        counts = sample_counts(
            layer, integration_s, config.background_fraction, seed, stream=k, reference_rate=reference
        )
        layers.append(counts.values)
    return ScanCube(
        grid,
        rates.alpha2,
        np.stack(layers, axis=-1),
        alpha1=alpha1,
        integration_s=float(integration_s),
        metadata={"seed": int(seed), "background_fraction": config.background_fraction},
    )
