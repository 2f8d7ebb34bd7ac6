import math

import numpy as np
import pytest

from negent.errors import ConfigError
from negent.models import FourBandParams, Geometry, TwoBandParams
from negent.scaling import (bulk_ep_scan, fit_log_slope, gapped_scaling, hierarchy_exponents,
                            linear_fit, predicted_gapless_slope, predicted_hierarchy,
                            saturation_scan, sweep_entropy_vs_L)

GAPLESS = TwoBandParams(0.5, 2.0, 1.0, 1)
GAPPED = TwoBandParams(0.8, 1.0, 1.2, 1)


def test_synthetic_fit():
    L = np.array([10, 20, 40, 80, 160])
    fit = fit_log_slope((L, -4 * np.log(L) + 2))
    assert fit.slope == pytest.approx(-4)
    assert fit.intercept == pytest.approx(2)
    assert fit.r_squared == pytest.approx(1)
    assert np.allclose(fit.local_slopes, -4)
    assert fit.window == list(L)


def test_fit_needs_four_points():
    with pytest.raises(ConfigError):
        linear_fit([1, 2, 3], [1, 2, 3])
    with pytest.raises(ConfigError):
        linear_fit([1, 1, 1, 1], [1, 2, 3, 4])


def test_fit_is_deterministic():
    L = np.array([22, 24, 26, 28, 30])
    y = np.sin(L)
    a, b = fit_log_slope((L, y)), fit_log_slope((L, y.copy()))
    assert a.slope == b.slope and a.intercept == b.intercept


@pytest.mark.parametrize("B,Ly,expected", [(1, 3, -4), (1, 5, -12), (2, 3, -18)])
def test_predicted_slope(B, Ly, expected):
    assert predicted_gapless_slope(B, Ly) == expected


@pytest.mark.parametrize("B,Ly,expected", [(1, 3, [1.0]), (1, 5, [2.0, 1.0]), (2, 3, [2.5, 1.5])])
def test_predicted_hierarchy(B, Ly, expected):
    assert predicted_hierarchy(B, Ly) == expected


def test_sweep_rows_in_order_and_failures_recorded():
    rows = sweep_entropy_vs_L(TwoBandParams(0.5, 2.0, 1.0, 1), Geometry(20, 3), [20, 10**90, 30])
    assert [r.L for r in rows] == [20, 10**90, 30]
    assert rows[0].error is None and rows[2].error is None
    assert "RangeError" in rows[1].error


def test_gapless_sweep_negative_and_decreasing():
    rows = sweep_entropy_vs_L(GAPLESS, Geometry(50, 3), [50, 70, 100, 140, 200])
    S = np.array([r.S.real for r in rows])
    assert np.all(S < 0)
    assert np.all(np.diff(S) < 0)
    assert max(r.pt_residual for r in rows) < 1e-6


def test_hermitian_sweep_positive():
    rows = sweep_entropy_vs_L(FourBandParams(1.2, 0.0, 0.0), Geometry(20, 2), [20, 40, 80])
    S = np.array([r.S.real for r in rows])
    assert np.all(S > 0)
    assert abs(S[2] - S[1]) < abs(S[1] - S[0]) + 0.1


def test_hierarchy_single_branch_small():
    rep = hierarchy_exponents(GAPLESS, Geometry(50, 3), [50, 70, 100, 140, 200])
    assert len(rep.exponents) == 1
    assert rep.exponents[0] == pytest.approx(1.0, abs=0.15)


def test_gapped_slope_magnitude_grows_with_Ly():
    rep = gapped_scaling(GAPPED, [10, 12, 14, 16], [10, 12, 14, 16])
    slopes = [f.slope for f in rep.fits]
    assert np.all(np.diff(slopes) < 0)
    assert rep.kappa > 0


def test_gapped_windows_must_not_overlap():
    with pytest.raises(ConfigError):
        gapped_scaling(GAPPED, [10, 12], [10, 12, 14, 16], saturation_L=14)
    with pytest.raises(ConfigError):
        gapped_scaling(GAPLESS, [10, 12], [10, 12, 14, 16])


def test_gapped_saturation_plateau():
    S = [r.S.real for r in sweep_entropy_vs_L(TwoBandParams(0.8, 2.0, 1.2, 1), Geometry(20, 4),
                                               [20, 40, 80])]
    assert abs(S[1] - S[2]) < 0.05 * abs(S[1])


def test_periodic_y_saturates_positive():
    # even Ly puts purely imaginary levels on E_F = 0, which is a refused tie
    rows = sweep_entropy_vs_L(TwoBandParams(0.8, 1.0, 1.2, 1), Geometry(20, 5, "periodic"),
                              [20, 40, 80])
    S = [r.S.real for r in rows]
    assert min(S) > 0
    assert abs(S[2] - S[1]) < 0.05 * S[1]


def test_saturation_scan_shape():
    rep = saturation_scan(TwoBandParams(0.8, 2.0, 1.2, 1), [4, 6, 8, 10], 40)
    assert rep.predicted_slope == pytest.approx(-math.log(10))
    assert rep.fit.r_squared > 0.98
    assert len(rep.S_min) == 4


def test_bulk_scan_gapped_has_no_exit():
    rep = bulk_ep_scan(FourBandParams(1.2, 0.0, 0.0), Geometry(20, 2), 0.0, [20, 24, 28, 32])
    assert rep.exit_L is None
