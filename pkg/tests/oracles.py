"""Reference implementations used only as test oracles.

They share no code with the package: losses come from scipy's log_softmax,
minimization from scipy.optimize, resampling metrics from plain loops.
"""
import math

import numpy as np
from scipy.optimize import minimize
from scipy.special import log_softmax


def ce_alpha_beta(logp, y, alpha, beta):
    z = log_softmax(alpha * logp + beta, axis=1)
    return -z[np.arange(len(y)), y].mean()


def lbfgs_beta_alpha_one(logp, y):
    """Shift ``beta`` minimizing cross-entropy with the scale fixed at one."""
    k = logp.shape[1]

    def f(b):
        z = log_softmax(logp + b, axis=1)
        q = np.exp(z)
        onehot = np.eye(k)[y]
        return -z[np.arange(len(y)), y].mean(), (q - onehot).mean(axis=0)

    res = minimize(f, np.zeros(k), jac=True, method="L-BFGS-B",
                   options={"gtol": 1e-12, "ftol": 1e-15, "maxiter": 10000})
    return res.x


def lbfgs_full(logp, y):
    k = logp.shape[1]
    res = minimize(lambda th: ce_alpha_beta(logp, y, th[0], th[1:]), np.r_[1.0, np.zeros(k)],
                   method="L-BFGS-B", options={"gtol": 1e-10, "ftol": 1e-15, "maxiter": 10000})
    return res.x[0], res.x[1:], res.fun


def central_difference(f, x, h=1e-5):
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        g[j] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def brute_force_bootstrap(probs, labels, indices, reference):
    """Per-resample (error, cross-entropy, nce) with explicit loops."""
    naive = -sum(math.log(reference[c]) for c in labels) / len(labels)
    errs, ces, nces = [], [], []
    for row in indices:
        wrong, loss = 0, 0.0
        for i in row:
            p = list(probs[i])
            best = max(range(len(p)), key=lambda j: (p[j], -j))
            wrong += best != labels[i]
            loss += -math.log(p[labels[i]])
        errs.append(wrong / len(row))
        ces.append(loss / len(row))
        nces.append(loss / len(row) / naive)

    def mean_std(v):
        m = sum(v) / len(v)
        return m, math.sqrt(sum((x - m) ** 2 for x in v) / len(v))

    return {"error_rate": mean_std(errs), "cross_entropy": mean_std(ces),
            "normalized_cross_entropy": mean_std(nces)}, (errs, ces, nces)
