import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from priorshift import (
    EmptyLabel,
    InvalidPosteriors,
    InvalidPrior,
    InvalidScores,
    InvalidTokenProb,
    LabelVector,
    LogScoreMatrix,
    PosteriorMatrix,
    PriorVector,
    compose_label_score,
    normalize_scores,
    predict,
)
from priorshift.core import PROB_FLOOR

finite = st.floats(-50, 50, allow_nan=False)
score_arrays = st.integers(1, 6).flatmap(
    lambda n: st.integers(2, 6).flatmap(lambda k: arrays(np.float64, (n, k), elements=finite))
)


@pytest.mark.parametrize("row,expected", [
    ([math.log(0.2), math.log(0.2)], [0.5, 0.5]),
    ([math.log(0.3), math.log(0.1)], [0.75, 0.25]),
    ([0.0, 0.0, 0.0, 0.0], [0.25] * 4),
])
def test_normalize_examples(row, expected):
    out = normalize_scores(LogScoreMatrix([row]))
    np.testing.assert_allclose(out.values[0], expected, atol=1e-15)


def test_normalize_does_not_overflow():
    out = normalize_scores(LogScoreMatrix([[1000.0, 999.0], [-1000.0, -1001.0]]))
    e = 1 / (1 + math.exp(-1))
    np.testing.assert_allclose(out.values, [[e, 1 - e], [e, 1 - e]], atol=1e-15)


def test_normalize_floors_tiny_probabilities():
    out = normalize_scores(LogScoreMatrix([[0.0, -2000.0]]))
    assert out.values[0, 1] == PROB_FLOOR > 0


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_normalize_rejects_non_finite(bad):
    with pytest.raises(InvalidScores):
        normalize_scores(LogScoreMatrix([[0.0, bad]]))


def test_log_score_matrix_invariants():
    with pytest.raises(InvalidScores):
        LogScoreMatrix([[0.0]])
    with pytest.raises(InvalidScores):
        LogScoreMatrix(np.zeros((0, 2)))
    with pytest.raises(InvalidScores):
        LogScoreMatrix([[0.0, 1.0]], ("a", "a"))
    m = LogScoreMatrix([[0.0, 1.0]], ("neg", "pos"))
    assert m.class_names == ("neg", "pos")
    with pytest.raises(ValueError):
        m.values[0, 0] = 3.0


def test_posterior_and_prior_invariants():
    PosteriorMatrix([[0.5, 0.5 + 5e-10]])
    with pytest.raises(InvalidPosteriors):
        PosteriorMatrix([[0.5, 0.6]])
    with pytest.raises(InvalidPosteriors):
        PosteriorMatrix([[1.1, -0.1]])
    with pytest.raises(InvalidPrior):
        PriorVector([0.28, 0.23, 0.19, 0.16, 0.13, 0.02])
    with pytest.raises(InvalidPrior):
        PriorVector([1.0])
    np.testing.assert_array_equal(PriorVector.uniform(4).probs, [0.25] * 4)


def test_label_vector_range():
    with pytest.raises(ValueError):
        LabelVector([0, 3], k=3)
    with pytest.raises(ValueError):
        LabelVector([0.5, 1])
    assert LabelVector([0, 2, 2], k=3).counts().tolist() == [1, 0, 2]


@given(score_arrays)
def test_rows_sum_to_one(s):
    out = normalize_scores(LogScoreMatrix(s)).values
    np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-12)


@given(score_arrays, st.floats(-100, 100))
def test_shift_invariance(s, c):
    a = normalize_scores(LogScoreMatrix(s)).values
    b = normalize_scores(LogScoreMatrix(s + c)).values
    np.testing.assert_allclose(a, b, atol=1e-12)


@given(score_arrays)
def test_argmax_preserved(s):
    # Gaps below output resolution collapse into ties after exponentiation.
    gap = s.max(axis=1, keepdims=True) - s
    assume(not np.any((gap > 0) & (gap <= 1e-9)))
    out = normalize_scores(LogScoreMatrix(s)).values
    np.testing.assert_array_equal(np.argmax(out, axis=1), np.argmax(s, axis=1))


@given(score_arrays, st.randoms(use_true_random=False))
def test_permutation_equivariance(s, r):
    perm = list(range(s.shape[1]))
    r.shuffle(perm)
    a = normalize_scores(LogScoreMatrix(s)).values[:, perm]
    b = normalize_scores(LogScoreMatrix(s[:, perm])).values
    np.testing.assert_allclose(a, b, atol=1e-15)


@pytest.mark.parametrize("tokens,expected", [
    ([-1.0, -0.5], -1.5),
    ([-2.3], -2.3),
    ([0.0, -0.7], -0.7),
])
def test_compose_label_score_examples(tokens, expected):
    assert compose_label_score(tokens) == expected


def test_compose_label_score_errors():
    with pytest.raises(EmptyLabel):
        compose_label_score([])
    with pytest.raises(InvalidTokenProb):
        compose_label_score([-0.1, 0.2])
    with pytest.raises(InvalidTokenProb):
        compose_label_score([-np.inf])


@settings(max_examples=200)
@given(st.lists(st.floats(-1, 0), min_size=2, max_size=8), st.data())
def test_compose_label_score_splits(tokens, data):
    cut = data.draw(st.integers(1, len(tokens) - 1))
    whole = compose_label_score(tokens)
    parts = compose_label_score(tokens[:cut]) + compose_label_score(tokens[cut:])
    assert abs(whole - parts) <= 1e-15


@pytest.mark.parametrize("row,expected", [
    ([0.1, 0.9], 1),
    ([0.5, 0.5], 0),
    ([0.2, 0.5, 0.3], 1),
])
def test_predict(row, expected):
    assert predict(PosteriorMatrix([row])).labels.tolist() == [expected]
