import numpy as np
import pytest

from priorshift import SynthConfig, generate, normalize_scores


def synth_posteriors(k, n, seed, bias=None, noise=1.0, prior=None):
    scores, labels = generate(SynthConfig(k=k, n=n, true_prior=prior, model_bias=bias,
                                          noise_scale=noise, seed=seed))
    return normalize_scores(scores), labels


@pytest.fixture
def three_class():
    """Synthetic 3-class set, N=200, with a biased first class."""
    return synth_posteriors(3, 200, seed=7, bias=[1.0, 0.0, -0.5])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
