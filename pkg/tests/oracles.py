"""Independent reference computations used by the tests.

Nothing here imports the code under test.
"""

import math

import numpy as np


def joint_spectrum(l1, l2, c1, c2, s1, s2, s12, amp=1.0):
    d1 = np.asarray(l1, float) - c1
    d2 = np.asarray(l2, float) - c2
    return amp * np.exp(-0.5 * (d1 * d1 / (s1 * s1) + d2 * d2 / (s2 * s2) + d1 * d2 / s12))


def numerical_fwhm(x, y):
    """FWHM of a sampled single-peaked curve by linear interpolation at half max."""
    y = np.asarray(y, float)
    k = int(np.argmax(y))
    half = y[k] / 2.0
    i = k
    while y[i] > half:
        i -= 1
    left = x[i] + (half - y[i]) * (x[i + 1] - x[i]) / (y[i + 1] - y[i])
    j = k
    while y[j] > half:
        j += 1
    right = x[j - 1] + (half - y[j - 1]) * (x[j] - x[j - 1]) / (y[j] - y[j - 1])
    return right - left


def brute_force_marginal_fwhm(c1, c2, s1, s2, s12, arm, step=0.01, span=6.0):
    ax1 = np.arange(c1 - span * s1 * 2, c1 + span * s1 * 2 + step / 2, step)
    ax2 = np.arange(c2 - span * s2 * 2, c2 + span * s2 * 2 + step / 2, step)
    L1, L2 = np.meshgrid(ax1, ax2, indexing="ij")
    g = joint_spectrum(L1, L2, c1, c2, s1, s2, s12)
    if arm == 1:
        return numerical_fwhm(ax1, g.sum(axis=1))
    return numerical_fwhm(ax2, g.sum(axis=0))


def scan_probability(a, b, delta, alpha1_deg, alpha2_deg):
    """Coincidence probability by explicit projection onto polarizer vectors.

    Arm 1 angles are measured from H, arm 2 angles from V; the two-photon
    state lives in the basis (H1H2, H1V2, V1H2, V1V2).
    """
    t1 = math.radians(alpha1_deg)
    t2 = np.radians(np.atleast_1d(np.asarray(alpha2_deg, float)))
    psi = np.array([0.0, a, b * np.exp(1j * delta), 0.0])
    p1 = np.array([math.cos(t1), math.sin(t1)])  # (H, V) components
    p2 = np.stack([np.sin(t2), np.cos(t2)], axis=-1)  # V axis at 0 deg
    # rows are kron(p1, p2) for each arm-2 angle
    proj = (p1[None, :, None] * p2[:, None, :]).reshape(-1, 4)
    return np.abs(proj @ psi) ** 2


def scan_argmax_deg(a, b, delta, resolution=0.01):
    angles = np.arange(-90.0, 90.0, resolution)
    return angles[int(np.argmax(scan_probability(a, b, delta, 45.0, angles)))]


def scan_contrast(a, b, delta, n=36001):
    c = scan_probability(a, b, delta, 45.0, np.linspace(-90, 90, n))
    return (c.max() - c.min()) / (c.max() + c.min())


def binary_entropy(p):
    return -sum(q * math.log2(q) for q in (p, 1 - p) if q > 0)
