import dataclasses
import math

from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

import oracles
from spdcmap import (
    DegenerateMarginalError,
    GaussianJointModel,
    SpectralMap,
    UndefinedStateError,
    ValidationError,
    WavelengthGrid,
    gaussian_eval,
    marginal_fwhm,
    mirror_path,
    path_amplitudes,
    validate,
)


@st.composite
def valid_models(draw):
    s1 = draw(st.floats(0.3, 4.0))
    s2 = draw(st.floats(0.3, 4.0))
    # |s12| strictly above s1*s2/2 keeps the quadratic form positive definite
    s12 = draw(st.floats(0.51, 20.0)) * s1 * s2 * draw(st.sampled_from([-1.0, 1.0]))
    return GaussianJointModel(
        draw(st.floats(770, 790)), draw(st.floats(770, 790)), s1, s2, s12, draw(st.floats(0.1, 1e4))
    )


class TestGaussianEval:
    def test_peak_equals_amplitude(self, paper_model):
        assert gaussian_eval(paper_model, 779.77, 779.10) == pytest.approx(1.0, abs=1e-15)

    def test_one_sigma_along_axis1(self, paper_model):
        val = gaussian_eval(paper_model, 779.77 + 1.265, 779.10)
        assert val == pytest.approx(math.exp(-0.5), rel=1e-12)

    def test_diagonal_offset_by_hand(self, paper_model):
        expected = math.exp(-0.5 * (1 / 1.265**2 + 1 / 1.853**2 + 1 / 1.509))
        assert gaussian_eval(paper_model, 780.77, 780.10) == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(math.exp(-0.5 * (1 / 1.600 + 1 / 3.434 + 1 / 1.509)), rel=1e-3)

    def test_matches_independent_formula(self, paper_model):
        L1, L2 = WavelengthGrid.centered(779.5, 0.37, 21).mesh()
        ref = oracles.joint_spectrum(L1, L2, 779.77, 779.10, 1.265, 1.853, 1.509)
        np.testing.assert_allclose(gaussian_eval(paper_model, L1, L2), ref, rtol=1e-13)

    def test_anticorrelated_for_positive_sigma12(self, paper_model):
        # moving both wavelengths the same way costs more than opposite ways
        same = gaussian_eval(paper_model, 780.77, 780.10)
        opposite = gaussian_eval(paper_model, 780.77, 778.10)
        assert opposite > same

    def test_invalid_model_raises(self):
        with pytest.raises(ValidationError):
            gaussian_eval(GaussianJointModel(780, 780, 0.0, 1, 1), 780, 780)

    @settings(max_examples=40, deadline=None)
    @given(valid_models())
    def test_maximum_at_center(self, m):
        step1, step2 = m.sigma1 / 40, m.sigma2 / 40
        ax1 = m.lambda1_center + step1 * np.arange(-200, 201)
        ax2 = m.lambda2_center + step2 * np.arange(-200, 201)
        L1, L2 = np.meshgrid(ax1, ax2, indexing="ij")
        i, j = np.unravel_index(np.argmax(gaussian_eval(m, L1, L2)), L1.shape)
        assert (i, j) == (200, 200)


class TestMirror:
    def test_paper_params(self, paper_model):
        m = mirror_path(paper_model)
        assert (m.lambda1_center, m.lambda2_center) == (779.10, 779.77)
        assert (m.sigma1, m.sigma2, m.sigma12, m.amplitude) == (1.853, 1.265, 1.509, 1.0)

    def test_symmetric_model_is_fixed_point(self):
        m = GaussianJointModel(780, 780, 1.5, 1.5, 2.0, 3.0)
        assert mirror_path(m) == m

    @settings(max_examples=50, deadline=None)
    @given(valid_models())
    def test_involution(self, m):
        assert mirror_path(mirror_path(m)) == m

    @settings(max_examples=30, deadline=None)
    @given(valid_models())
    def test_exchange_symmetry(self, m):
        L1, L2 = WavelengthGrid.centered(780, 0.7, 25).mesh()
        np.testing.assert_allclose(gaussian_eval(mirror_path(m), L1, L2), gaussian_eval(m, L2, L1), rtol=1e-12)


class TestMarginal:
    # frozen from the brute-force oracle in tests/oracles.py
    @pytest.mark.parametrize("arm, expected", [(1, 4.7290), (2, 6.9276)])
    def test_paper_values(self, paper_model, arm, expected):
        assert marginal_fwhm(paper_model, arm) == pytest.approx(expected, abs=5e-4)

    @pytest.mark.parametrize("arm", [1, 2])
    def test_against_brute_force(self, paper_model, arm):
        ref = oracles.brute_force_marginal_fwhm(779.77, 779.10, 1.265, 1.853, 1.509, arm, step=0.02)
        assert marginal_fwhm(paper_model, arm) == pytest.approx(ref, rel=5e-3)

    def test_uncorrelated_limit(self):
        m = GaussianJointModel(780, 780, 1.0, 1.0, math.inf)
        assert marginal_fwhm(m, 1) == pytest.approx(2 * math.sqrt(2 * math.log(2)), rel=1e-15)
        assert marginal_fwhm(m, 1) == pytest.approx(2.3548, abs=1e-4)

    @pytest.mark.parametrize("arm", [1, 2])
    def test_degenerate_bracket(self, arm):
        # bracket 1/s^2 - s_other^2/(4 s12^2) < 0 whenever 4 s12^2 < s1^2 s2^2
        m = GaussianJointModel(780, 780, 2.0, 2.0, 1.0)
        with pytest.raises(DegenerateMarginalError):
            marginal_fwhm(m, arm)

    def test_bad_arm(self, paper_model):
        with pytest.raises(ValidationError):
            marginal_fwhm(paper_model, 3)


class TestPathAmplitudes:
    def test_balanced(self):
        a, b = path_amplitudes(1, 1)
        assert a == b == math.sqrt(0.5)

    def test_single_path(self):
        assert path_amplitudes(1, 0) == (1.0, 0.0)

    def test_four_to_one(self):
        a, b = path_amplitudes(4, 1)
        assert (a, b) == pytest.approx((0.894427191, 0.4472135955), abs=1e-9)
        assert a**2 + b**2 == pytest.approx(1, abs=1e-15)
        assert a**2 / b**2 == pytest.approx(4, rel=1e-12)

    def test_both_zero(self):
        with pytest.raises(UndefinedStateError):
            path_amplitudes(0, 0)

    @given(st.floats(0, 1e6), st.floats(0, 1e6))
    def test_normalized(self, g1, g2):
        if g1 + g2 <= 0:
            return
        a, b = path_amplitudes(g1, g2)
        assert 0 <= a <= 1 and 0 <= b <= 1
        assert a * a + b * b == pytest.approx(1.0, abs=1e-12)

    @given(st.floats(1e-300, 1e300))
    def test_symmetric_locus_exact(self, g):
        a, b = path_amplitudes(g, g)
        assert a == b == math.sqrt(0.5)


class TestValidate:
    def test_paper_params_ok(self, paper_model):
        assert 4 * 1.509**2 == pytest.approx(9.108, abs=1e-3)
        assert (1.265 * 1.853) ** 2 == pytest.approx(5.494, abs=1e-3)
        assert validate(paper_model) is paper_model

    def test_zero_sigma(self, paper_model):
        with pytest.raises(ValidationError, match="sigma1"):
            validate(dataclasses.replace(paper_model, sigma1=0.0))

    def test_not_positive_definite(self):
        with pytest.raises(ValidationError, match="positive definite"):
            validate(GaussianJointModel(780, 780, 2.0, 2.0, 1.0))

    def test_every_problem_reported(self):
        with pytest.raises(ValidationError) as info:
            validate(GaussianJointModel(780, 780, -1.0, 0.0, 1.0, -2.0))
        assert len(info.value.problems) >= 3


class TestContainers:
    def test_grid_pixel_mapping(self):
        g = WavelengthGrid(770.0, 771.0, 0.5, 0.25, 4, 3)
        L1, L2 = g.mesh()
        assert L1.shape == (4, 3)
        assert (L1[2, 1], L2[2, 1]) == (771.0, 771.25)

    @pytest.mark.parametrize("kw", [dict(step1=0.0), dict(count2=0)])
    def test_grid_invariants(self, kw):
        args = dict(start1=770, start2=770, step1=0.5, step2=0.5, count1=3, count2=3)
        args.update(kw)
        with pytest.raises(ValidationError):
            WavelengthGrid(**args)

    def test_map_shape_mismatch(self, small_grid):
        with pytest.raises(ValidationError):
            SpectralMap(small_grid, np.zeros((2, 2)), "rate")

    def test_counts_must_be_integers(self, small_grid):
        with pytest.raises(ValidationError):
            SpectralMap(small_grid, np.full(small_grid.shape, 0.5), "counts")

    def test_entropy_range(self, small_grid):
        with pytest.raises(ValidationError):
            SpectralMap(small_grid, np.full(small_grid.shape, 1.5), "entropy_bits")
