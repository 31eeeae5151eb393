import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_spec
from fclife import (
    RhlpConfig,
    RhlpModel,
    approximate,
    density,
    fit_em,
    gen_spectrum,
    irls_update,
    log_axis,
    log_likelihood,
    logistic_probs,
    regressor_vector,
    segment,
)
from fclife.rhlp import _irls, irls_gradient, regressor_matrix
from fclife.synth import gate_weights
from oracles import best_label_permutation, fd_gradient


def single_regime_model(beta=(0.0,), sigma2=1.0):
    b = np.atleast_2d(np.asarray(beta, dtype=float))
    return RhlpModel(
        w=np.zeros((1, 2)), betas=b, sigma2=np.array([sigma2]),
        loglik=0.0, K=1, p=b.shape[1] - 1,
    )


# ---------------------------------------------------------------- types/ops

def test_regressor_vector_examples():
    assert np.array_equal(regressor_vector(0.0, 3), [1, 0, 0, 0])
    assert np.array_equal(regressor_vector(2.0, 2), [1, 2, 4])
    assert np.array_equal(regressor_vector(-1.0, 3), [1, -1, 1, -1])


def test_logistic_probs_uniform_when_zero():
    w = np.zeros((3, 2))
    for f in (-4.0, 0.0, 11.0):
        np.testing.assert_allclose(logistic_probs(w, f), 1 / 3, atol=1e-15)


def test_logistic_probs_single_class():
    assert logistic_probs(np.zeros((1, 2)), 3.21) == pytest.approx(1.0, abs=0)


def test_logistic_probs_limits():
    w = np.array([[0.0, 1.0], [0.0, -1.0], [0.0, 0.0]])
    np.testing.assert_allclose(logistic_probs(w, 0.0), 1 / 3, atol=1e-15)
    np.testing.assert_allclose(logistic_probs(w, 1e4), [1, 0, 0], atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(
    st.integers(min_value=1, max_value=5),
    st.floats(min_value=-50, max_value=50),
    st.integers(min_value=0, max_value=2**31 - 1),
)
def test_logistic_probs_normalized(K, f, seed):
    # logit spreads are kept below exp()'s underflow threshold (~745);
    # beyond it the smallest probability is flushed to exactly 0.0
    w = np.random.default_rng(seed).standard_normal((K, 2))
    pi = logistic_probs(w, f)
    assert abs(pi.sum() - 1.0) < 1e-12
    assert (pi > 0).all() and (pi < 1.0 + 1e-15).all()


def test_logistic_probs_shift_invariance(rng):
    for _ in range(20):
        w = rng.standard_normal((4, 2))
        shift = rng.standard_normal(2)
        f = rng.uniform(-5, 5)
        np.testing.assert_allclose(
            logistic_probs(w, f), logistic_probs(w + shift, f), atol=1e-12
        )


def test_density_standard_normal_at_zero():
    m = single_regime_model()
    # 1/sqrt(2*pi), frozen
    assert density(m, 1.7, 0.0) == pytest.approx(0.3989422804014327, abs=1e-15)


def test_density_identical_regimes_collapse(rng):
    beta = np.array([0.4, -0.1, 0.02])
    single = RhlpModel(
        w=np.zeros((1, 2)), betas=beta[None, :], sigma2=np.array([0.3]),
        loglik=0.0, K=1, p=2,
    )
    for _ in range(10):
        w = np.vstack([rng.standard_normal(2), [0.0, 0.0]])
        double = RhlpModel(
            w=w, betas=np.vstack([beta, beta]), sigma2=np.array([0.3, 0.3]),
            loglik=0.0, K=2, p=2,
        )
        f, x = rng.uniform(-3, 3), rng.uniform(-2, 2)
        assert density(double, f, x) == pytest.approx(density(single, f, x), rel=1e-12)


def test_density_integrates_to_one():
    quad = pytest.importorskip("scipy.integrate").quad
    m = RhlpModel(
        w=np.array([[0.5, 0.2], [0.1, -0.3], [0.0, 0.0]]),
        betas=np.array([[0.0, 1, 0, 0], [1, 0, 0.5, 0], [2, -1, 0, 0.1]]),
        sigma2=np.array([0.5, 1.2, 2.0]),
        loglik=0.0, K=3, p=3,
    )
    for f in (-2.0, 0.0, 1.3, 4.0):
        val, _ = quad(lambda x: density(m, f, x), -np.inf, np.inf)
        assert abs(val - 1.0) < 1e-6


def test_log_likelihood_single_point():
    m = single_regime_model()
    ll = log_likelihood(m, np.array([1.7]), np.array([0.0]))
    # log(1/sqrt(2*pi)), frozen
    assert ll == pytest.approx(-0.9189385332046727, abs=1e-15)


def test_log_likelihood_duplicated_dataset(rng):
    m = RhlpModel(
        w=np.array([[1.0, -0.5], [0.0, 0.0]]),
        betas=np.array([[0.1, 0.2], [0.7, -0.1]]),
        sigma2=np.array([0.4, 0.9]),
        loglik=0.0, K=2, p=1,
    )
    f = np.sort(rng.uniform(-3, 3, 17))
    x = rng.standard_normal(17)
    single = log_likelihood(m, f, x)
    twice = log_likelihood(m, np.concatenate([f, f]), np.concatenate([x, x]))
    assert twice == pytest.approx(2.0 * single, rel=1e-13)


# ---------------------------------------------------------------- IRLS

def test_irls_uniform_tau_stays_uniform():
    f = np.linspace(0, 10, 40)
    tau = np.full((40, 3), 1 / 3)
    w = irls_update(tau, f, np.zeros((3, 2)))
    np.testing.assert_allclose(logistic_probs(w, f), 1 / 3, atol=1e-8)


def test_irls_hard_threshold_crossing():
    f = np.linspace(0, 10, 60)
    c = 4.0
    tau = np.column_stack([(f < c).astype(float), (f >= c).astype(float)])
    w = irls_update(tau, f, np.zeros((2, 2)))
    dense = np.linspace(0, 10, 100001)
    pis = logistic_probs(w, dense)
    crossing = dense[int(np.argmin(np.abs(pis[:, 0] - 0.5)))]
    assert abs(crossing - c) <= 0.1


def test_irls_single_class_identity():
    f = np.linspace(0, 5, 20)
    w = irls_update(np.ones((20, 1)), f, np.zeros((1, 2)))
    assert np.array_equal(w, np.zeros((1, 2)))


def test_irls_objective_nondecreasing(rng):
    f = np.linspace(0, 7, 50)
    raw = rng.random((50, 3))
    tau = raw / raw.sum(axis=1, keepdims=True)

    from fclife.rhlp import _gate_design, _gate_objective

    V = _gate_design(f)
    w0 = rng.standard_normal((3, 2))
    w0[-1] = 0.0
    q0 = _gate_objective(tau, V, w0)
    w1, info = _irls(tau, f, w0)
    assert _gate_objective(tau, V, w1) >= q0


def test_irls_gradient_matches_finite_differences(rng):
    from fclife.rhlp import _gate_design, _gate_objective

    f = np.sort(rng.uniform(-2, 8, 30))
    raw = rng.random((30, 3))
    tau = raw / raw.sum(axis=1, keepdims=True)
    V = _gate_design(f)
    for _ in range(10):
        w = rng.standard_normal((3, 2))
        w[-1] = 0.0
        analytic = irls_gradient(tau, f, w).ravel()

        def q_of(free):
            wm = np.vstack([free.reshape(2, 2), [0.0, 0.0]])
            return _gate_objective(tau, V, wm)

        numeric = fd_gradient(q_of, w[:2].ravel())
        denom = max(np.linalg.norm(numeric), 1e-8)
        assert np.linalg.norm(analytic - numeric) / denom < 1e-5


def test_irls_singular_flag_on_saturated_gate():
    # perfectly separable responsibilities drive the gate to saturation;
    # the Newton system eventually degenerates and the update must stop
    # cleanly with the flag set and the objective not regressed
    f = np.linspace(0, 10, 60)
    tau = np.column_stack([(f < 4.0).astype(float), (f >= 4.0).astype(float)])
    w, info = _irls(tau, f, np.zeros((2, 2)), max_iters=200, tol=1e-16)
    assert info["singular"]
    from fclife.rhlp import _gate_design, _gate_objective

    assert _gate_objective(tau, _gate_design(f), w) >= _gate_objective(
        tau, _gate_design(f), np.zeros((2, 2))
    )


# ---------------------------------------------------------------- EM fit

def test_fit_em_recovers_three_regimes():
    spec = make_spec(seed=5, noise_frac=0.01, n_points=200)
    s, labels = gen_spectrum(spec)
    lf = log_axis(s)
    model = fit_em(lf, s.im_ohm, RhlpConfig(seed=5))
    seg = segment(model, lf)
    acc, perm = best_label_permutation(seg.labels, labels)
    assert acc >= 0.95
    # interior regime (the central one) recovers its cubic within 5%
    fitted_idx = perm.index(2)
    truth = np.asarray(spec.regimes[1])
    rel = np.linalg.norm(model.betas[fitted_idx] - truth) / np.linalg.norm(truth)
    assert rel <= 0.05


def test_fit_em_k1_equals_polynomial_ols(rng):
    lf = np.sort(rng.uniform(0, 7, 60))
    x = 0.3 - 0.2 * lf + 0.05 * lf**2 - 0.003 * lf**3 + 0.01 * rng.standard_normal(60)
    model = fit_em(lf, x, RhlpConfig(K=1, p=3, seed=2))
    beta_ols, *_ = np.linalg.lstsq(regressor_matrix(lf, 3), x, rcond=None)
    np.testing.assert_allclose(model.betas[0], beta_ols, atol=1e-8)


def test_fit_em_single_polynomial_with_k3():
    lf = np.linspace(0, 7, 80)
    x = 0.3 - 0.2 * lf + 0.05 * lf**2 - 0.003 * lf**3
    model = fit_em(lf, x, RhlpConfig(K=3, p=3, seed=4))
    approx = approximate(model, lf)
    assert np.mean((approx - x) ** 2) < 1e-10


def test_fit_em_ascent_on_random_data(rng):
    for trial in range(15):
        n = int(rng.integers(20, 60))
        lf = np.sort(rng.uniform(-2, 9, n))
        while np.unique(lf).size < n:
            lf = np.sort(rng.uniform(-2, 9, n))
        x = rng.standard_normal(n) * rng.uniform(0.01, 2.0)
        K = int(rng.integers(1, 4))
        p = int(rng.integers(0, 4))
        if n < K * (p + 2):
            continue
        model = fit_em(lf, x, RhlpConfig(K=K, p=p, seed=trial, n_init=2))
        for run in model.diagnostics["runs"]:
            h = np.asarray(run["loglik_history"])
            if h.size > 1:
                assert np.diff(h).min() >= -1e-10


def test_fit_em_deterministic():
    spec = make_spec(seed=3)
    s, _ = gen_spectrum(spec)
    lf = log_axis(s)
    m1 = fit_em(lf, s.im_ohm, RhlpConfig(seed=7))
    m2 = fit_em(lf, s.im_ohm, RhlpConfig(seed=7))
    assert np.array_equal(m1.w, m2.w)
    assert np.array_equal(m1.betas, m2.betas)
    assert np.array_equal(m1.sigma2, m2.sigma2)
    assert m1.loglik == m2.loglik


def test_fit_em_loglik_not_below_initial_models():
    spec = make_spec(seed=6)
    s, _ = gen_spectrum(spec)
    lf = log_axis(s)
    model = fit_em(lf, s.im_ohm, RhlpConfig(seed=1))
    for run in model.diagnostics["runs"]:
        if not run["failed"]:
            assert model.loglik >= run["loglik_history"][0] - 1e-10


def test_fit_em_preconditions():
    lf = np.linspace(0, 7, 14)
    with pytest.raises(ValueError):
        fit_em(lf, np.zeros(14), RhlpConfig(K=3, p=3))  # n < K*(p+2)
    lf = np.linspace(0, 7, 20)
    with pytest.raises(ValueError):
        fit_em(lf[::-1], np.zeros(20), RhlpConfig())  # not increasing


def test_fit_em_variance_floor_respected():
    lf = np.linspace(0, 7, 30)
    x = 0.5 * lf  # exactly representable by every regime
    model = fit_em(lf, x, RhlpConfig(K=2, p=1, seed=0, n_init=2))
    assert (model.sigma2 >= 1e-9).all()


# ---------------------------------------------------------------- approximation

def test_approximate_k1_is_polynomial(rng):
    beta = np.array([0.2, -0.3, 0.04, 0.001])
    m = single_regime_model(beta)
    lf = rng.uniform(-3, 8, 40)
    np.testing.assert_allclose(
        approximate(m, lf), regressor_matrix(lf, 3) @ beta, rtol=1e-14, atol=1e-14
    )


def test_approximate_hard_gate_is_piecewise():
    betas = np.array([[1.0, 0, 0, 0], [5.0, 0, 0, 0], [-2.0, 0, 0, 0]])
    m = RhlpModel(
        w=gate_weights(2.0, 5.0, 600.0), betas=betas,
        sigma2=np.ones(3), loglik=0.0, K=3, p=3,
    )
    assert approximate(m, 1.0) == pytest.approx(1.0, abs=1e-9)
    assert approximate(m, 3.5) == pytest.approx(5.0, abs=1e-9)
    assert approximate(m, 6.5) == pytest.approx(-2.0, abs=1e-9)


def test_approximate_is_convex_combination(rng):
    for _ in range(10):
        w = np.vstack([rng.standard_normal((2, 2)), [0.0, 0.0]])
        betas = rng.standard_normal((3, 4))
        m = RhlpModel(w=w, betas=betas, sigma2=np.ones(3), loglik=0.0, K=3, p=3)
        lf = rng.uniform(-4, 9, 50)
        vals = approximate(m, lf)
        polys = regressor_matrix(lf, 3) @ betas.T
        assert (vals >= polys.min(axis=1) - 1e-12).all()
        assert (vals <= polys.max(axis=1) + 1e-12).all()


def test_approximate_tracks_low_noise_data():
    spec = make_spec(seed=2, noise_frac=0.01)
    s, _ = gen_spectrum(spec)
    lf = log_axis(s)
    model = fit_em(lf, s.im_ohm, RhlpConfig(seed=2))
    mse = np.mean((approximate(model, lf) - s.im_ohm) ** 2)
    assert mse <= 1.5 * spec.noise_sigma**2


# ---------------------------------------------------------------- segmentation

def test_segment_analytic_boundaries():
    m = RhlpModel(
        w=gate_weights(2.0, 5.0, 40.0),
        betas=np.zeros((3, 4)), sigma2=np.ones(3), loglik=0.0, K=3, p=3,
    )
    axis = np.linspace(0, 7, 120)
    seg = segment(m, axis)
    assert seg.boundaries.shape == (2,)
    np.testing.assert_allclose(seg.boundaries, [2.0, 5.0], atol=1e-5)
    assert (seg.boundaries > axis[0]).all() and (seg.boundaries < axis[-1]).all()


def test_segment_single_regime():
    m = single_regime_model()
    seg = segment(m, np.linspace(0, 7, 30))
    assert (seg.labels == 1).all()
    assert seg.boundaries.size == 0


def test_segment_tie_break_to_smallest_index():
    m = RhlpModel(
        w=np.zeros((3, 2)), betas=np.zeros((3, 4)),
        sigma2=np.ones(3), loglik=0.0, K=3, p=3,
    )
    seg = segment(m, np.linspace(0, 7, 30))
    assert (seg.labels == 1).all()
    assert seg.boundaries.size == 0
