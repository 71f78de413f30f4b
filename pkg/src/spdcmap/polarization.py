"""Wavelength-local polarization state of a photon pair.

The local state is ``a |H>1|V>2 + b e^{i delta} |V>1|H>2``. Analyzer angles
are given in degrees; arm 1 is measured from the H axis and arm 2 from the V
axis, so the setting (0, 0) selects the H1V2 path and (90, 90) the V1H2 path.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.special import entr

from .exceptions import UndefinedStateError, ValidationError
from .spectral_model import path_amplitudes

_NORM_TOL = 1e-9


@dataclass(frozen=True)
class TwoPathState:
    a: float
    b: float
    delta: float = math.pi

    def __post_init__(self):
        problems = []
        if not (0.0 <= self.a <= 1.0 and 0.0 <= self.b <= 1.0):
            problems.append(f"amplitudes must lie in [0, 1], got a={self.a}, b={self.b}")
        if abs(self.a**2 + self.b**2 - 1.0) > _NORM_TOL:
            problems.append(f"a^2 + b^2 must equal 1, got {self.a**2 + self.b**2!r}")
        if not math.isfinite(self.delta):
            problems.append("delta must be finite")
        if problems:
            raise ValidationError(problems)

    @classmethod
    def from_rates(cls, g_hv, g_vh, delta=math.pi):
        a, b = path_amplitudes(g_hv, g_vh)
        return cls(a, b, delta)

    @classmethod
    def from_angle(cls, theta, delta=math.pi):
        """State with ``a = cos(theta)``, ``b = sin(theta)``, theta in [0, pi/2]."""
        return cls(abs(math.cos(theta)), abs(math.sin(theta)), delta)


@dataclass(frozen=True)
class AnalyzerSetting:
    alpha1: float
    alpha2: float

    @property
    def radians(self):
        return math.radians(self.alpha1), math.radians(self.alpha2)


def projection_amplitude(amp_hv, amp_vh, delta, alpha1_deg, alpha2_deg):
    """Complex coincidence amplitude for path amplitudes (vectorized).

    ``amp_hv``/``amp_vh`` need not be normalized; unnormalized square roots
    of path rates give a coincidence rate directly.
    """
    t1 = np.deg2rad(alpha1_deg)
    t2 = np.deg2rad(alpha2_deg)
    return amp_hv * np.cos(t1) * np.cos(t2) + amp_vh * np.exp(1j * delta) * np.sin(t1) * np.sin(t2)


def coincidence_prob(state, setting):
    """Probability that both photons pass their linear analyzers."""
    amp = projection_amplitude(state.a, state.b, state.delta, setting.alpha1, setting.alpha2)
    return float(np.abs(amp) ** 2)


def scan_coefficients(state, alpha1_deg=45.0):
    """Coefficients ``(p0, p1, p2)`` of ``C(alpha2) = p0 + p1 cos 2a2 + p2 sin 2a2``."""
    t1 = math.radians(alpha1_deg)
    c2, s2 = math.cos(t1) ** 2, math.sin(t1) ** 2
    a2, b2 = state.a**2 * c2, state.b**2 * s2
    cross = state.a * state.b * math.cos(state.delta) * math.cos(t1) * math.sin(t1)
    return (a2 + b2) / 2.0, (a2 - b2) / 2.0, cross


def _principal_half_angle(p1, p2):
    """Angle (deg) in (-90, 90] maximizing ``p1 cos 2x + p2 sin 2x``."""
    gamma = 0.5 * math.degrees(math.atan2(p2, p1))
    if gamma <= -90.0:
        gamma += 180.0
    return gamma


def gamma_max(state):
    """Arm-2 angle (deg, in (-90, 90]) maximizing coincidences at alpha1 = 45 deg.

    For delta = pi this is ``-arctan(b/a)``. Any other phase gives the exact
    argmax of the sinusoid; a flat scan has no maximum and raises.
    """
    _, p1, p2 = scan_coefficients(state)
    if math.hypot(p1, p2) <= 1e-15:
        raise UndefinedStateError("coincidence scan is flat; no maximum angle exists")
    return _principal_half_angle(p1, p2)


def entropy_bits(a, b):
    """``-a^2 log2 a^2 - b^2 log2 b^2``, elementwise, with 0 log 0 = 0."""
    return (entr(np.square(a)) + entr(np.square(b))) / math.log(2.0)


def entanglement_entropy(state):
    """Entropy of entanglement in bits."""
    return float(entropy_bits(state.a, state.b))


def visibility_45(state):
    """Contrast of the alpha1 = 45 deg scan, ``(max - min) / (max + min)``."""
    a2, b2 = state.a**2, state.b**2
    return math.sqrt((a2 - b2) ** 2 + 4.0 * a2 * b2 * math.cos(state.delta) ** 2) / (a2 + b2)
