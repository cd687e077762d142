import math

import numpy as np
import pytest

from covcp.bootstrap import (
    ThresholdConfig,
    VarianceProfile,
    bootstrap_threshold,
    build_Z,
    row_scales,
    theoretical_threshold,
    variance_profile,
)
from covcp.core import CenteredData, center, vech_unindex


def _vech(x):
    p = len(x)
    return np.array([x[a] * x[b] for a in range(p) for b in range(a, p)])


def test_build_Z_n4(rng):
    c = CenteredData(rng.standard_normal((4, 2)))
    T = [_vech(row) for row in c.values]
    Z = build_Z(c)
    assert Z.shape == (3, 2)
    np.testing.assert_allclose(Z[:, 0], (T[1] - T[0]) / math.sqrt(2), rtol=1e-14)
    np.testing.assert_allclose(Z[:, 1], (T[3] - T[2]) / math.sqrt(2), rtol=1e-14)


def test_build_Z_constant_data():
    assert np.all(build_Z(center(np.ones((9, 3)))) == 0.0)


def test_build_Z_hand_computation(rng):
    c = center(rng.standard_normal((8, 2)))
    x = c.values
    Z = build_Z(c)
    for ell in range(3):
        a, b = vech_unindex(ell, 2)
        for t in range(4):
            first = x[2 * t, a - 1] * x[2 * t, b - 1]
            second = x[2 * t + 1, a - 1] * x[2 * t + 1, b - 1]
            assert abs(Z[ell, t] - (second - first) / math.sqrt(2)) < 1e-12


def test_build_Z_drops_trailing_odd_row(rng):
    c = center(rng.standard_normal((9, 2)))
    assert build_Z(c).shape == (3, 4)


def test_row_scales_examples():
    prof = row_scales(np.array([[0.0, 0.0], [1.0, -1.0], [0.0, 0.0]]), p=2)
    np.testing.assert_allclose(prof.scales, [0.0, math.sqrt(2), 0.0])


def test_row_scales_needs_two_columns():
    with pytest.raises(ValueError):
        row_scales(np.ones((3, 1)))


def test_row_scales_standard_normal_concentration():
    inside = 0
    for seed in range(200):
        z = np.random.default_rng(seed).standard_normal((1, 500))
        o = row_scales(z, p=1).scales[0]
        inside += 0.9 <= o <= 1.1
    assert inside >= 198


def test_variance_profile_matches_row_scales(rng):
    c = center(rng.standard_normal((21, 6)))
    np.testing.assert_allclose(variance_profile(c, chunk=4).scales, row_scales(build_Z(c)).scales, rtol=1e-13)


def test_zero_profile_gives_zero():
    prof = VarianceProfile(3, np.zeros(6))
    assert prof.degenerate
    assert bootstrap_threshold(prof, 50) == 0.0


def test_threshold_deterministic_and_finite(rng):
    prof = variance_profile(center(rng.standard_normal((40, 8))))
    cfg = ThresholdConfig(seed=99)
    t1 = bootstrap_threshold(prof, 40, cfg)
    t2 = bootstrap_threshold(prof, 40, ThresholdConfig(seed=99))
    assert t1 == t2 and math.isfinite(t1)
    assert bootstrap_threshold(prof, 40, ThresholdConfig(seed=100)) != t1


@pytest.mark.parametrize("c", [0.5, 3.0])
def test_threshold_scales_quadratically(rng, c):
    prof = variance_profile(center(rng.standard_normal((30, 5))))
    base = bootstrap_threshold(prof, 30, ThresholdConfig(seed=7))
    scaled = bootstrap_threshold(VarianceProfile(5, c * prof.scales), 30, ThresholdConfig(seed=7))
    assert scaled == pytest.approx(c**2 * base, rel=1e-9)


def test_multiple_draws_use_median(rng):
    prof = variance_profile(center(rng.standard_normal((30, 4))))
    singles = [
        bootstrap_threshold(prof, 30, ThresholdConfig(seed=5))
    ]
    cfg = ThresholdConfig(replicates=3, seed=5)
    assert cfg.aggregation == "median-of-maxima" and cfg.is_extension
    tau = bootstrap_threshold(prof, 30, cfg)
    assert math.isfinite(tau)
    # the first draw of a multi-draw run is the single-draw threshold
    assert singles[0] in _draws(prof, 30, 5, 3)
    assert tau == float(np.median(_draws(prof, 30, 5, 3)))


def _draws(prof, n, seed, B):
    from covcp.bootstrap import _max_resampled_d
    return [_max_resampled_d(prof.scales, n, seed, r) for r in range(B)]


def test_threshold_config_validation():
    with pytest.raises(ValueError):
        ThresholdConfig(replicates=0)
    with pytest.raises(ValueError):
        ThresholdConfig(aggregation="mean")


def test_theoretical_threshold_examples():
    assert theoretical_threshold(math.e**2, math.e, 1.0) == pytest.approx(2.0)
    assert theoretical_threshold(100, 100, 2.0) == pytest.approx(2.0 * math.log(100))
    assert theoretical_threshold(500, 200, 5.0) == pytest.approx(31.073, abs=5e-4)
    with pytest.raises(ValueError):
        theoretical_threshold(10, 10, 0.0)
