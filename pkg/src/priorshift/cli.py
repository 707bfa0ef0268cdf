"""Command-line interface: ingest, adapt, calibrate, evaluate, synth.

Exit codes: 0 success, 2 usage or data error, 1 internal error.
"""
from __future__ import annotations

import argparse
import logging
import sys
import warnings

import numpy as np

from . import io as fio
from .adaptation import (
    Empirical,
    Explicit,
    FixedPointConfig,
    Uniform,
    adapt_naive,
    apply_beta,
    estimate_model_prior,
    resolve_target_prior,
    solve_beta_fixed_point,
)
from .calibration import CalibrationMode, FitConfig, apply_affine, fit_affine
from .core import PriorVector, default_class_names
from .datasets import PRIOR_NAMES, bundled_prior
from .errors import IoError, PriorShiftError
from .metrics import BootstrapConfig, bootstrap_evaluate
from .synthgen import SynthConfig, generate

METHODS = ("ucpa-naive", "sucpa-naive", "ucpa", "sucpa")

log = logging.getLogger("priorshift")


class UsageError(Exception):
    pass


def _sidecar_path(out, given):
    return given or f"{out}.meta.json"


def _check_classes(a, b, what):
    if tuple(a) != tuple(b):
        raise UsageError(f"{what}: class names differ: {list(a)} vs {list(b)}")


def cmd_ingest(args):
    scores, labels = fio.read_token_scores(args.token_scores)
    fio.write_scores(scores, args.scores_out, labels)
    print(f"wrote {scores.n} x {scores.k} log-scores to {args.scores_out}")
    return 0


def _target_spec(args, train_labels, class_names):
    prior = args.prior or ("uniform" if args.method.startswith("ucpa") else "empirical")
    if args.method.startswith("ucpa") and prior != "uniform":
        raise UsageError(f"{args.method} assumes a uniform target prior; use sucpa for --prior {prior}")
    if prior == "uniform":
        return Uniform()
    if prior == "empirical":
        if train_labels is None:
            raise UsageError(f"{args.method} with an empirical prior needs labels in the train file "
                             "(or pass --prior file --prior-file PATH)")
        return Empirical(train_labels, args.smoothing)
    if not args.prior_file:
        raise UsageError("--prior file needs --prior-file PATH")
    return Explicit(fio.read_prior(args.prior_file, class_names))


def cmd_adapt(args):
    train, train_labels = fio.read_scores_or_posteriors(args.train)
    test, test_labels = fio.read_scores_or_posteriors(args.test)
    _check_classes(train.class_names, test.class_names, "train/test")
    target = resolve_target_prior(_target_spec(args, train_labels, train.class_names), train.k)

    meta = {"method": args.method, "target_prior": target.probs,
            "class_names": list(train.class_names), "n_train": train.n, "n_test": test.n}
    if args.method.endswith("-naive"):
        model = estimate_model_prior(train)
        result = adapt_naive(test, model, target)
        adapted = result.adapted
        meta.update(model_prior=model.probs, beta=result.beta, converged=True, iterations=0)
    else:
        cfg = FixedPointConfig(args.max_iterations, args.tolerance, args.damping)
        result = solve_beta_fixed_point(train, target, cfg)
        meta.update(model_prior=result.model_prior.probs, converged=result.converged,
                    iterations=result.iterations_used,
                    fixed_point={"max_iterations": cfg.max_iterations,
                                 "tolerance": cfg.tolerance, "damping": cfg.damping})
        if result.beta is None:
            raise PriorShiftError("fixed point diverged to non-finite beta")
        meta["beta"] = result.beta
        adapted = apply_beta(test, result.beta)
        if not result.converged:
            print(f"warning: fixed point did not converge in {result.iterations_used} iterations",
                  file=sys.stderr)
    fio.write_posteriors(adapted, args.out, test_labels)
    fio.write_json(meta, _sidecar_path(args.out, args.sidecar))
    print(f"{args.method}: wrote {adapted.n} adapted posteriors to {args.out}")
    return 0


def cmd_calibrate(args):
    train, train_labels = fio.read_scores_or_posteriors(args.train)
    test, test_labels = fio.read_scores_or_posteriors(args.test)
    _check_classes(train.class_names, test.class_names, "train/test")
    if train_labels is None:
        raise UsageError("calibration needs labels on every train record")
    cfg = FitConfig(max_iterations=args.max_iterations, gradient_tolerance=args.tolerance)
    params = fit_affine(train, train_labels, CalibrationMode(args.mode), cfg)
    if not params.converged:
        print(f"warning: calibration stopped after {params.iterations} iterations before "
              "reaching the gradient tolerance", file=sys.stderr)
    calibrated = apply_affine(test, params)
    fio.write_posteriors(calibrated, args.out, test_labels)
    fio.write_params(params, _sidecar_path(args.out, args.params_out), train.class_names)
    print(f"{args.mode}: alpha={params.alpha:.6g} beta={np.round(params.beta, 6).tolist()}")
    return 0


def _labels_from(post, labels, args):
    if not args.labels:
        if labels is None:
            raise UsageError("no labels: the posterior file has none and --labels was not given")
        return labels
    other, other_labels = fio.read_scores_or_posteriors(args.labels)
    if other_labels is None:
        raise UsageError(f"{args.labels} does not carry labels on every record")
    if other.n != post.n:
        raise UsageError(f"length mismatch: {post.n} posteriors vs {other.n} labels")
    if post.ids is not None and other.ids is not None and set(post.ids) == set(other.ids):
        where = {rid: i for i, rid in enumerate(other.ids)}
        return type(other_labels)(other_labels.labels[[where[r] for r in post.ids]], post.k)
    return other_labels


def cmd_evaluate(args):
    post, labels = fio.read_scores_or_posteriors(args.posteriors)
    labels = _labels_from(post, labels, args)
    if len(labels) != post.n:
        raise UsageError(f"length mismatch: {post.n} posteriors vs {len(labels)} labels")
    ref = fio.read_prior(args.reference_prior, post.class_names) if args.reference_prior else None
    cfg = BootstrapConfig(args.bootstrap, args.seed) if args.bootstrap else None
    report = bootstrap_evaluate(post, labels, cfg, ref)
    print(f"samples                  {report.n_samples}")
    print(f"error rate               {report.error_rate:.4f}")
    print(f"cross-entropy (nats)     {report.cross_entropy:.4f}")
    nce = report.normalized_cross_entropy
    print(f"normalized cross-entropy {'n/a' if nce is None else f'{nce:.4f}'}")
    if report.bootstrap is not None:
        b = report.bootstrap
        print(f"bootstrap ({b.n_resamples} resamples, seed {b.seed}):")
        for m in b.mean:
            print(f"  {m:24s} {b.mean[m]:.4f} +/- {b.std[m]:.4f}")
    if args.report_out:
        fio.write_report(report, args.report_out)
    return 0


def _float_list(text, what):
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"{what} must be a comma-separated list of numbers: {text!r}") from None


def cmd_synth(args):
    names = tuple(args.class_names.split(",")) if args.class_names else ()
    k = args.k
    if args.prior in (None, "uniform"):
        prior = None
    elif args.prior in PRIOR_NAMES:
        prior, table_names = bundled_prior(args.prior)
        names = names or table_names
    else:
        prior = PriorVector(np.array(_float_list(args.prior, "--prior")))
    if k is None:
        k = prior.k if prior is not None else (len(names) or None)
    if k is None:
        raise UsageError("pass --k, --class-names or a --prior to fix the class count")
    bias = _float_list(args.bias, "--bias") if args.bias else None
    if bias is not None and len(bias) == 1:
        bias = bias + [0.0] * (k - 1)
    cfg = SynthConfig(k=k, n=args.n, true_prior=prior, model_bias=bias, noise_scale=args.noise,
                      seed=args.seed, margin=args.margin, class_names=names or default_class_names(k))
    scores, labels = generate(cfg)
    fio.write_scores(scores, args.out, labels if not args.no_labels else None)
    print(f"wrote {scores.n} x {scores.k} synthetic log-scores to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="priorshift", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", help="sum per-token label log-probs into a score file")
    s.add_argument("token_scores")
    s.add_argument("scores_out")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("adapt", help="prior adaptation (UCPA/SUCPA, naive or iterative)")
    s.add_argument("train", help="unlabelled (ucpa) or labelled (sucpa) train scores")
    s.add_argument("test", help="scores to adapt")
    s.add_argument("--method", choices=METHODS, default="ucpa")
    s.add_argument("--prior", choices=("uniform", "empirical", "file"),
                   help="target prior (default: uniform for ucpa*, empirical for sucpa*)")
    s.add_argument("--prior-file", help="JSON prior with 'probs' (and optional 'class_names')")
    s.add_argument("--smoothing", type=float, default=0.0,
                   help="additive count smoothing for the empirical prior")
    s.add_argument("--out", required=True, help="adapted posteriors (JSON Lines)")
    s.add_argument("--sidecar", help="metadata JSON (default: OUT.meta.json)")
    s.add_argument("--max-iterations", type=int, default=100)
    s.add_argument("--tolerance", type=float, default=1e-8)
    s.add_argument("--damping", type=float, default=1.0)
    s.set_defaults(func=cmd_adapt)

    s = sub.add_parser("calibrate", help="supervised affine calibration")
    s.add_argument("train", help="labelled train scores")
    s.add_argument("test")
    s.add_argument("--mode", choices=[m.value for m in CalibrationMode], default="affine")
    s.add_argument("--out", required=True)
    s.add_argument("--params-out", help="parameter JSON (default: OUT.meta.json)")
    s.add_argument("--max-iterations", type=int, default=500)
    s.add_argument("--tolerance", type=float, default=1e-8)
    s.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("evaluate", help="error rate, cross-entropy and bootstrap")
    s.add_argument("posteriors", help="posterior or score file")
    s.add_argument("--labels", help="file carrying the labels, if POSTERIORS has none")
    s.add_argument("--bootstrap", type=int, default=0, metavar="N")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--reference-prior", help="prior JSON for the naive system "
                                             "(default: label frequencies)")
    s.add_argument("--report-out")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("synth", help="generate a synthetic labelled score file")
    s.add_argument("out")
    s.add_argument("--k", type=int)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--prior", help=f"'uniform', one of {', '.join(PRIOR_NAMES)}, or p1,p2,...")
    s.add_argument("--bias", help="per-class log offsets b1,b2,... (a single value biases class 0)")
    s.add_argument("--noise", type=float, default=1.0)
    s.add_argument("--margin", type=float, default=2.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--class-names")
    s.add_argument("--no-labels", action="store_true")
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            warnings.showwarning = lambda msg, *a, **k: print(f"warning: {msg}", file=sys.stderr)
            return args.func(args)
    except (UsageError, PriorShiftError, IoError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - reported as internal error
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
