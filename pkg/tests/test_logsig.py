import numpy as np
import pytest

from fclife import LogsigParams, SimplexConfig, fit_logsig, logsig_eval

TIGHT = SimplexConfig(tol_f=1e-16, tol_x=1e-12, max_iters=4000, seed=0)


def test_eval_center():
    assert logsig_eval(LogsigParams(2, 1, 0, 1), 0.0) == pytest.approx(2.0, abs=1e-15)


def test_eval_saturation():
    p = LogsigParams(2, 1, 0, 1)
    assert logsig_eval(p, 1e4) == pytest.approx(3.0, abs=1e-12)
    assert logsig_eval(p, -1e4) == pytest.approx(1.0, abs=1e-12)
    # no overflow far beyond the clamp
    assert np.isfinite(logsig_eval(p, 1e9))
    assert np.isfinite(logsig_eval(p, -1e9))


def test_eval_flat_when_a2_zero():
    p = LogsigParams(5, 0, 7, -1)
    for x in (-100.0, 0.0, 7.0, 42.0):
        assert logsig_eval(p, x) == pytest.approx(1.5, abs=1e-15)


def test_monotonicity(rng):
    xs = np.linspace(-5, 15, 300)
    for _ in range(20):
        a1 = rng.uniform(-2, 2)
        a2 = rng.uniform(-3, 3)
        p = LogsigParams(a1, a2, rng.uniform(0, 8), rng.uniform(-1, 1))
        vals = logsig_eval(p, xs)
        d = np.diff(vals)
        if a1 * a2 > 0:
            assert (d >= 0).all()
        elif a1 * a2 < 0:
            assert (d <= 0).all()


def test_sign_center_symmetry(rng):
    for _ in range(30):
        a = rng.uniform(-2, 2, 4)
        p = LogsigParams(*a)
        q = LogsigParams(a[0], -a[1], a[2], a[3])
        x = rng.uniform(-10, 10)
        assert logsig_eval(p, x) == pytest.approx(
            logsig_eval(q, 2 * a[2] - x), rel=1e-12, abs=1e-12
        )


def test_fit_recovers_noiseless_truth():
    truth = LogsigParams(0.8, 2.0, 4.0, 0.3)
    logf = np.linspace(np.log(0.01), np.log(30000.0), 50)
    re = logsig_eval(truth, logf)
    fit, mse = fit_logsig(logf, re, TIGHT)
    np.testing.assert_allclose(fit.as_array(), truth.as_array(), atol=1e-4)
    assert mse < 1e-10


def test_fit_canonicalizes_to_positive_a1():
    # (-a1, -a2, a3, a4+a1) generates the identical curve
    truth = LogsigParams(-0.8, -2.0, 4.0, 1.1)
    logf = np.linspace(0.0, 8.0, 60)
    re = logsig_eval(truth, logf)
    fit, mse = fit_logsig(logf, re, TIGHT)
    assert fit.a1 >= 0
    np.testing.assert_allclose(
        fit.as_array(), [0.8, 2.0, 4.0, 1.1 - 0.8], atol=1e-4
    )
    assert mse < 1e-10


def test_fit_constant_data():
    logf = np.linspace(0, 7, 40)
    re = np.full(40, 1.7)
    fit, mse = fit_logsig(logf, re, TIGHT)
    assert mse < 1e-10
    np.testing.assert_allclose(logsig_eval(fit, logf), 1.7, atol=1e-5)


def test_fit_noisy_mse_bounded_by_noise():
    truth = LogsigParams(0.8, 2.0, 4.0, 0.3)
    logf = np.linspace(np.log(0.01), np.log(30000.0), 50)
    rng = np.random.default_rng(5)
    sigma = 0.01
    re = logsig_eval(truth, logf) + sigma * rng.standard_normal(50)
    _, mse = fit_logsig(logf, re, TIGHT)
    assert mse <= 2.0 * sigma**2


def test_fit_never_worse_than_constant_fit(rng):
    logf = np.linspace(0, 7, 30)
    for _ in range(5):
        re = rng.standard_normal(30)
        _, mse = fit_logsig(logf, re, SimplexConfig(seed=1))
        assert mse <= np.var(re) + 1e-12


def test_fit_input_validation():
    with pytest.raises(ValueError):
        fit_logsig(np.array([1.0, 2.0, 3.0, 4.0]), np.zeros(4))  # n < 5
    with pytest.raises(ValueError):
        fit_logsig(np.array([1.0, 1.0, 2.0, 3.0, 4.0]), np.zeros(5))  # not increasing
