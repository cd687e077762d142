import numpy as np
import pytest

from covcp.core import ComponentSeries, center, component_series
from covcp.detect import (
    CHANGE_ESTIMATED,
    NO_COMPONENTS,
    PipelineConfig,
    UCurve,
    argmax_k,
    cusum_curve,
    run_pipeline,
    u_curve,
    u_curve_from_series,
    u_n,
)
from covcp.oracle import naive_cusum_gap, naive_un, naive_un_components
from covcp.reduction import SelectionSet
from covcp.simgen import Scenario, run_replications


def test_u_n_zero_series():
    s = [ComponentSeries.from_values(np.zeros(9))] * 2
    assert all(u_n(s, k) == 0.0 for k in range(2, 8))


def test_u_n_hand_case():
    s = ComponentSeries.from_values([1.0, 1.0, 0.0, 0.0])
    assert u_n([s], 2, 4) == 0.015625


def test_u_n_errors():
    s = ComponentSeries.from_values(np.ones(10))
    with pytest.raises(ValueError):
        u_n([], 3, 10)
    with pytest.raises(ValueError):
        u_n([s], 9, 10)


def test_u_n_matches_quadruple_sum(rng):
    c = center(rng.standard_normal((12, 3)))
    ells = [0, 2, 4]
    series = [component_series(c, e) for e in ells]
    curve = u_curve(c, np.array(ells))
    sel = SelectionSet(3, np.array(ells), 0.0)
    for k in range(2, 11):
        ref = naive_un(c, sel, k)
        assert u_n(series, k) == pytest.approx(ref, rel=1e-9)
        assert curve[k] == pytest.approx(ref, rel=1e-9)


def test_curve_from_series_matches(rng):
    c = center(rng.standard_normal((15, 4)))
    ells = np.array([1, 5, 9])
    a = u_curve(c, ells).values
    b = u_curve_from_series([component_series(c, e) for e in ells]).values
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_argmax_unimodal():
    n = 15
    ks = np.arange(2, n - 1)
    assert argmax_k(UCurve(n, -((ks - 7.0) ** 2))) == 7


def test_argmax_tie_breaks_low():
    assert argmax_k(UCurve(12, np.full(9, 3.0))) == 2


def test_ucurve_length_checked():
    with pytest.raises(ValueError):
        UCurve(10, np.zeros(8))
    with pytest.raises(IndexError):
        UCurve(10, np.zeros(7))[1]


@pytest.mark.parametrize("seed", range(5))
def test_cusum_gap_identity(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(8, 13))
    c = center(rng.standard_normal((n, 3)))
    ells = np.sort(rng.choice(6, size=3, replace=False))
    full = cusum_curve(c, ells)
    debiased = u_curve(c, ells)
    for k in range(2, n - 1):
        gap = naive_cusum_gap(c, ells.tolist(), k)
        assert full[k] - debiased[k] == pytest.approx(gap, rel=1e-9)


def test_cusum_curve_is_full_quadruple_sum(rng):
    c = center(rng.standard_normal((9, 2)))
    ells = [0, 2]
    from covcp.oracle import _stacked
    x = np.array(_stacked(c))[:, ells]
    n = 9
    for k in range(2, n - 1):
        total = 0.0
        for i in range(k):
            for t in range(k):
                for j in range(k, n):
                    for l in range(k, n):
                        total += (x[i] - x[j]) @ (x[t] - x[l])
        assert cusum_curve(c, np.array(ells))[k] == pytest.approx(total / n**4, rel=1e-10)


@pytest.mark.parametrize("scale", [0.1, 10.0])
def test_u_scale_invariance(rng, scale):
    x = rng.standard_normal((40, 4))
    x[20:, 0] *= 3
    c1, c2 = center(x), center(scale * x)
    u1, u2 = u_curve(c1), u_curve(c2)
    np.testing.assert_allclose(u2.values, scale**4 * u1.values, rtol=1e-9)
    assert argmax_k(u1) == argmax_k(u2)


def test_u_location_invariance(rng):
    x = rng.standard_normal((30, 4))
    shift = rng.uniform(-50, 50, size=4)
    u1 = u_curve(center(x)).values
    u2 = u_curve(center(x + shift)).values
    np.testing.assert_allclose(u2, u1, rtol=1e-9, atol=1e-9 * np.abs(u1).max())


def _case4(rng, n=100, p=10):
    x = rng.standard_normal((n, p))
    x[n // 2:, 0] *= np.sqrt(8.0)
    return x


def test_pipeline_bootstrap(rng):
    res = run_pipeline(_case4(rng))
    assert res.status == CHANGE_ESTIMATED
    assert res.tau_rule == "bootstrap"
    assert 0 in res.selection.indices
    assert res.r_hat == res.k_hat / 100
    assert 2 <= res.k_hat <= 98
    assert len(res.curve.values) == 97
    assert res.meta["boot_replicates"] == 1


def test_pipeline_theory_rule(rng):
    res = run_pipeline(_case4(rng), PipelineConfig.from_rule("theory:5"))
    assert res.tau_rule == "theory"
    assert res.meta["C"] == 5.0
    assert res.tau == pytest.approx(5 * np.log(100))


def test_pipeline_no_selection(rng):
    res = run_pipeline(_case4(rng), PipelineConfig.from_rule("theory:1e9"))
    assert res.status == NO_COMPONENTS
    assert res.m == 0 and res.k_hat is None and res.r_hat is None and res.curve is None


def test_pipeline_fallback_all(rng):
    x = _case4(rng)
    res = run_pipeline(x, PipelineConfig.from_rule("theory:1e9", fallback_all=True))
    full = run_pipeline(x, PipelineConfig(skip_reduction=True))
    assert res.status == CHANGE_ESTIMATED and res.meta["fallback_all"]
    assert res.k_hat == full.k_hat


def test_pipeline_skip_reduction(rng):
    res = run_pipeline(_case4(rng, p=6), PipelineConfig(skip_reduction=True))
    assert res.m == 21 and res.tau == -np.inf and res.tau_rule == "none"


def test_pipeline_deterministic(rng):
    x = _case4(rng)
    a, b = run_pipeline(x, PipelineConfig(seed=3)), run_pipeline(x, PipelineConfig(seed=3))
    assert a.tau == b.tau and a.k_hat == b.k_hat


@pytest.mark.parametrize("rule", ["theory", "theory:", "theory:x", "boot", "theory:-1"])
def test_bad_tau_rules(rule):
    with pytest.raises(ValueError):
        PipelineConfig.from_rule(rule)


@pytest.mark.slow
def test_no_reduction_case1_p60():
    rep = run_replications(Scenario.standard(1, 200, 60), 200, 11, PipelineConfig(skip_reduction=True))
    print(f"case 1, p=60, no reduction: mean={rep.mean:.4f} std={rep.std:.4f} MSE={rep.mse:.4f}")
    assert rep.n_no_detection == 0
    assert rep.mse <= 0.002
