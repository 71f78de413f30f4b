import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from spdcmap import (
    AnalyzerSetting,
    BandwidthSelector,
    GaussianJointFit,
    SinusoidFit,
    SourceConfig,
    PAPER_HV_MODEL,
    ValidationError,
    WavelengthGrid,
    expected_cube,
    rate_map,
)


@pytest.mark.parametrize("est", [SinusoidFit(), GaussianJointFit(max_iter=50), BandwidthSelector(exponent=2)])
def test_params_and_clone(est):
    params = est.get_params()
    copy = clone(est)
    assert copy.get_params() == params
    assert copy is not est


def test_unfitted():
    with pytest.raises(NotFittedError):
        SinusoidFit().predict([0.0, 10.0])
    with pytest.raises(NotFittedError):
        GaussianJointFit().predict([[780.0, 780.0]])
    with pytest.raises(NotFittedError):
        BandwidthSelector(exponent=1).transform(None)


def test_sinusoid_predict_and_score():
    x = np.arange(0.0, 180.0, 15.0)
    y = 5 + 2 * np.cos(np.radians(2 * x)) - np.sin(np.radians(2 * x))
    est = SinusoidFit().fit(x, y)
    np.testing.assert_allclose(est.coef_, [5, 2, -1], atol=1e-12)
    assert est.score(x, y) == pytest.approx(1.0)
    assert est.residual_ == pytest.approx(0.0, abs=1e-20)


def test_sinusoid_input_validation():
    with pytest.raises(ValidationError):
        SinusoidFit().fit([0.0, 10.0, np.nan], [1, 2, 3])
    with pytest.raises(ValidationError):
        SinusoidFit().fit([0.0, 10.0, 20.0], [1, 2])


def test_gaussian_predict():
    grid = WavelengthGrid.centered(779.5, 0.5, 31)
    L1, L2 = grid.mesh()
    X = np.column_stack([L1.ravel(), L2.ravel()])
    y = rate_map(SourceConfig(PAPER_HV_MODEL), AnalyzerSetting(0, 0), grid).values.ravel() * 100
    est = GaussianJointFit(min_counts=0.5).fit(X, y)
    np.testing.assert_allclose(est.predict(X), y, rtol=1e-6, atol=1e-9)
    with pytest.raises(ValidationError):
        GaussianJointFit(weighting="bogus").fit(X, y)


def test_gaussian_data_weighting():
    grid = WavelengthGrid.centered(779.5, 0.5, 31)
    L1, L2 = grid.mesh()
    X = np.column_stack([L1.ravel(), L2.ravel()])
    y = rate_map(SourceConfig(PAPER_HV_MODEL), AnalyzerSetting(0, 0), grid).values.ravel() * 100
    est = GaussianJointFit(min_counts=0.5, weighting="data").fit(X, y)
    assert est.model_.sigma1 == pytest.approx(1.265, rel=1e-6)


def test_selector_refit_after_clone():
    grid = WavelengthGrid.centered(779.5, 0.5, 21)
    cube = expected_cube(SourceConfig(PAPER_HV_MODEL), grid, np.arange(-90.0, 90.0, 20.0))
    sel = BandwidthSelector(fwhm_nm=[1, 5, 20], v_min=0.9).fit(cube)
    again = clone(sel).fit(cube)
    assert again.best_fwhm_ == sel.best_fwhm_
    np.testing.assert_array_equal(again.curve_.visibility, sel.curve_.visibility)


def test_gaussian_skips_masked_pixels():
    grid = WavelengthGrid.centered(779.5, 0.5, 31)
    L1, L2 = grid.mesh()
    X = np.column_stack([L1.ravel(), L2.ravel()])
    y = rate_map(SourceConfig(PAPER_HV_MODEL), AnalyzerSetting(0, 0), grid).values.ravel() * 100
    y[::7] = np.nan
    est = GaussianJointFit(min_counts=0.5).fit(X, y)
    assert est.model_.sigma2 == pytest.approx(1.853, rel=1e-6)
    assert est.n_samples_fit_ == np.isfinite(y).sum()
