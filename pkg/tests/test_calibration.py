import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.special import softmax

from priorshift import (
    AffineParams,
    CalibrationMode,
    Empirical,
    FitConfig,
    PosteriorMatrix,
    ZeroClassCount,
    apply_affine,
    cross_entropy_loss,
    fit_affine,
    loss_gradient,
    resolve_target_prior,
    solve_beta_fixed_point,
)

from conftest import synth_posteriors
from oracles import ce_alpha_beta, central_difference, lbfgs_full

posterior_arrays = st.integers(1, 8).flatmap(
    lambda n: st.integers(2, 5).flatmap(
        lambda k: arrays(np.float64, (n, k), elements=st.floats(-6, 6))
    )
).map(lambda s: PosteriorMatrix(softmax(s, axis=1)))


def test_apply_affine_examples():
    post = PosteriorMatrix([[0.9, 0.1], [0.3, 0.7]])
    np.testing.assert_allclose(apply_affine(post, AffineParams.identity(2)).values, post.values,
                               atol=1e-12)
    np.testing.assert_allclose(apply_affine(post, AffineParams(0.0, [0, 0])).values, 0.5, atol=1e-15)
    out = apply_affine(post, AffineParams(2.0, [0, 0])).values[0]
    np.testing.assert_allclose(out, [0.81 / 0.82, 0.01 / 0.82], rtol=1e-14)


def test_apply_affine_handles_zero_probabilities():
    post = PosteriorMatrix([[1.0, 0.0]])
    out = apply_affine(post, AffineParams(0.5, [0.0, 0.0])).values
    assert np.all(np.isfinite(out)) and out[0, 0] == 1.0


@given(posterior_arrays, st.floats(0.01, 5), st.floats(-3, 3))
def test_apply_affine_rows_and_argmax(post, alpha, shift):
    out = apply_affine(post, AffineParams(alpha, np.full(post.k, shift))).values
    np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-12)
    # Positive scale with a uniform shift is monotone per row.
    logp = post.log()
    top2 = np.sort(logp, axis=1)[:, -2:]
    clear = top2[:, 1] - top2[:, 0] > 1e-9
    np.testing.assert_array_equal(np.argmax(out, 1)[clear], np.argmax(post.values, 1)[clear])


def test_cross_entropy_examples():
    ident = AffineParams.identity(2)
    onehot = PosteriorMatrix([[1.0, 0.0], [0.0, 1.0]])
    assert cross_entropy_loss(onehot, [0, 1], ident) == 0.0
    uniform = PosteriorMatrix(np.full((3, 4), 0.25))
    assert cross_entropy_loss(uniform, [0, 1, 3], AffineParams.identity(4)) == pytest.approx(math.log(4), abs=1e-15)
    post = PosteriorMatrix([[0.5, 0.5], [0.8, 0.2]])
    expected = -(math.log(0.5) + math.log(0.8)) / 2
    assert cross_entropy_loss(post, [0, 0], ident) == pytest.approx(expected, abs=1e-15)
    assert expected == pytest.approx(0.4581, abs=1e-4)


def test_gradient_zero_on_perfect_onehot():
    post = PosteriorMatrix(np.eye(3))
    d_alpha, d_beta = loss_gradient(post, [0, 1, 2], AffineParams.identity(3))
    np.testing.assert_allclose(d_beta, 0.0, atol=1e-15)


def test_gradient_matches_finite_differences(three_class, rng):
    post, labels = three_class
    logp = np.log(post.values)
    for _ in range(10):
        alpha = rng.uniform(0.3, 2.0)
        beta = rng.normal(0, 1, 3)
        d_alpha, d_beta = loss_gradient(post, labels, AffineParams(alpha, beta))
        analytic = np.r_[d_alpha, d_beta]
        numeric = central_difference(lambda th: ce_alpha_beta(logp, labels.labels, th[0], th[1:]),
                                     np.r_[alpha, beta])
        rel = np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric)
        assert rel < 1e-6


def test_fit_alpha1_first_order_condition(three_class):
    post, labels = three_class
    params = fit_affine(post, labels, CalibrationMode.ALPHA_FIXED_ONE)
    assert params.converged and params.alpha == 1.0
    _, d_beta = loss_gradient(post, labels, params)
    assert np.max(np.abs(d_beta)) < 1e-6
    freq = np.bincount(labels.labels, minlength=3) / labels.labels.size
    np.testing.assert_allclose(apply_affine(post, params).values.mean(axis=0), freq, atol=1e-6)


def test_fit_alpha1_matches_fixed_point(three_class):
    post, labels = three_class
    params = fit_affine(post, labels, "alpha1")
    res = solve_beta_fixed_point(post, resolve_target_prior(Empirical(labels), 3))
    assert np.max(np.abs(apply_affine(post, params).values - res.adapted.values)) < 1e-4


def test_fit_full_matches_independent_minimizer(three_class):
    post, labels = three_class
    params = fit_affine(post, labels, CalibrationMode.FULL)
    alpha, beta, loss = lbfgs_full(np.log(post.values), labels.labels)
    assert params.converged
    assert params.loss <= loss + 1e-10
    assert abs(params.alpha - alpha) < 1e-4
    ref = softmax(alpha * np.log(post.values) + beta, axis=1)
    assert np.max(np.abs(apply_affine(post, params).values - ref)) < 1e-4


def test_fit_never_worse_than_identity():
    # Posteriors equal to the label frequencies are already optimal for alpha=1.
    post = PosteriorMatrix(np.tile([0.75, 0.25], (8, 1)))
    labels = [0, 0, 0, 1, 0, 0, 0, 1]
    ident = cross_entropy_loss(post, labels, AffineParams.identity(2))
    for mode in CalibrationMode:
        params = fit_affine(post, labels, mode)
        assert cross_entropy_loss(post, labels, params) <= ident + 1e-12


def test_temperature_preserves_predictions():
    post, labels = synth_posteriors(4, 300, seed=21, noise=0.6)
    params = fit_affine(post, labels, CalibrationMode.TEMPERATURE_ONLY)
    assert params.alpha > 0
    np.testing.assert_array_equal(params.beta, 0.0)
    np.testing.assert_array_equal(np.argmax(apply_affine(post, params).values, 1),
                                  np.argmax(post.values, 1))
    # Synthetic posteriors are under-confident: margin 2 vs unit noise.
    assert params.alpha > 1


def test_zero_class_count():
    post = PosteriorMatrix([[0.6, 0.3, 0.1], [0.2, 0.7, 0.1]])
    for mode in (CalibrationMode.FULL, CalibrationMode.ALPHA_FIXED_ONE):
        with pytest.raises(ZeroClassCount) as exc:
            fit_affine(post, [0, 1], mode)
        assert exc.value.classes == (2,)
    fit_affine(post, [0, 1], CalibrationMode.TEMPERATURE_ONLY)


def test_non_convergence_returns_best_so_far(three_class):
    post, labels = three_class
    start = cross_entropy_loss(post, labels, AffineParams.identity(3))
    params = fit_affine(post, labels, "affine", FitConfig(max_iterations=2))
    assert not params.converged and params.iterations == 2
    assert params.loss < start


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32), st.integers(2, 6))
def test_loss_is_convex_along_segments(seed, k):
    post, labels = synth_posteriors(k, 40, seed=seed)
    r = np.random.default_rng(seed)
    a = np.r_[r.uniform(-1, 3), r.normal(0, 2, k)]
    b = np.r_[r.uniform(-1, 3), r.normal(0, 2, k)]
    f = lambda th: cross_entropy_loss(post, labels, AffineParams(th[0], th[1:]))
    assert f((a + b) / 2) <= (f(a) + f(b)) / 2 + 1e-10


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32), st.integers(2, 6), st.sampled_from(list(CalibrationMode)))
def test_fit_descends(seed, k, mode):
    post, labels = synth_posteriors(k, 50, seed=seed, bias=np.linspace(-1, 1, k))
    if mode.beta_free and np.any(np.bincount(labels.labels, minlength=k) == 0):
        return
    params = fit_affine(post, labels, mode)
    assert params.loss <= cross_entropy_loss(post, labels, AffineParams.identity(k)) + 1e-12
