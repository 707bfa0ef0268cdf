"""JSON Lines readers and writers for scores, posteriors, priors, parameters and reports.

Every JSON Lines file starts with a header object naming the file kind and
the classes, followed by one record per line. Floats are written in the
shortest form that round-trips exactly; ``-0.0`` is written as ``0.0``.
Readers validate everything they construct.
"""
from __future__ import annotations

import json
import math
import os
import warnings
from typing import Iterator, Optional

import numpy as np

from .calibration import AffineParams, CalibrationMode
from .core import (
    LabelVector,
    LogScoreMatrix,
    PosteriorMatrix,
    PriorVector,
    compose_label_score,
    normalize_scores,
)
from .errors import (
    DuplicateId,
    EmptyLabel,
    InvalidPosteriors,
    InvalidTokenProb,
    IoError,
    ParseError,
    PriorShiftError,
    SchemaError,
)
from .metrics import EvaluationReport

FORMAT_VERSION = 1
SCORES = "scores"
TOKEN_SCORES = "token_scores"
POSTERIORS = "posteriors"


def canonical(obj):
    """Copy of ``obj`` with numpy values converted and negative zeros cleared."""
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return canonical(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            raise ValueError(f"cannot serialize non-finite float {x}")
        return x + 0.0
    return obj


def dumps(obj, indent=None) -> str:
    return json.dumps(canonical(obj), sort_keys=True, indent=indent, allow_nan=False)


def _open(path, mode):
    try:
        return open(path, mode, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise IoError(f"cannot open {path}: {exc.strerror or exc}") from exc


def write_json(obj, path):
    text = dumps(obj, indent=2) + "\n"
    with _open(path, "w") as f:
        f.write(text)


def read_json(path):
    with _open(path, "r") as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc.msg}", exc.lineno) from exc


def _write_lines(path, header: dict, records):
    with _open(path, "w") as f:
        f.write(dumps(header) + "\n")
        for rec in records:
            f.write(dumps(rec) + "\n")


def _iter_lines(path) -> Iterator[tuple[int, dict]]:
    """Yield ``(line_number, object)`` for every non-blank line, parsing lazily."""
    with _open(path, "r") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", lineno) from exc
            if not isinstance(obj, dict):
                raise ParseError("expected a JSON object", lineno)
            yield lineno, obj


def _read_header(lines, kinds, path):
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise ParseError(f"{path}: file is empty, expected a header line") from None
    names = header.get("class_names")
    if not isinstance(names, list) or len(names) < 2 or not all(isinstance(c, str) for c in names):
        raise SchemaError("header must declare class_names, a list of >= 2 strings", lineno)
    if len(set(names)) != len(names):
        raise SchemaError("class_names must be unique", lineno)
    kind = header.get("kind", kinds[0])
    if kind not in kinds:
        raise SchemaError(f"expected file kind {' or '.join(kinds)}, got {kind!r}", lineno)
    return kind, tuple(names)


def _record_id(rec, lineno, seen):
    rid = rec.get("id")
    if not isinstance(rid, str):
        raise SchemaError("record needs a string 'id'", lineno)
    if rid in seen:
        raise DuplicateId(f"duplicate id {rid!r}", lineno)
    seen.add(rid)
    return rid


def _number_row(row, k, field, lineno):
    if not isinstance(row, list) or len(row) != k:
        raise SchemaError(f"'{field}' must be a list of {k} numbers", lineno)
    if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in row):
        raise SchemaError(f"'{field}' must contain only numbers", lineno)
    return [float(x) for x in row]


def _record_label(rec, k, lineno):
    if "label" not in rec or rec["label"] is None:
        return None
    label = rec["label"]
    if isinstance(label, bool) or not isinstance(label, int) or not 0 <= label < k:
        raise SchemaError(f"label must be an integer in [0, {k})", lineno)
    return label


def _collect_labels(labels, k, path):
    have = [lab is not None for lab in labels]
    if all(have):
        return LabelVector(np.array(labels, dtype=np.int64), k)
    if any(have):
        warnings.warn(
            f"{path}: only {sum(have)} of {len(have)} records carry a label; ignoring labels",
            stacklevel=3,
        )
    return None


def read_scores(path) -> tuple[LogScoreMatrix, Optional[LabelVector]]:
    """Read a score file. Labels are returned only if every record has one."""
    lines = _iter_lines(path)
    _, names = _read_header(lines, (SCORES,), path)
    k = len(names)
    ids, rows, labels, seen = [], [], [], set()
    for lineno, rec in lines:
        ids.append(_record_id(rec, lineno, seen))
        row = _number_row(rec.get("logscores"), k, "logscores", lineno)
        if not all(math.isfinite(x) for x in row):
            raise SchemaError("logscores must be finite", lineno)
        rows.append(row)
        labels.append(_record_label(rec, k, lineno))
    if not rows:
        raise SchemaError(f"{path}: no records after the header")
    scores = LogScoreMatrix(np.array(rows), names, tuple(ids))
    return scores, _collect_labels(labels, k, path)


def write_scores(scores: LogScoreMatrix, path, labels: Optional[LabelVector] = None):
    ids = scores.ids or tuple(f"r{i}" for i in range(scores.n))
    if labels is not None and len(labels) != scores.n:
        raise ValueError("labels and scores differ in length")

    def records():
        for i in range(scores.n):
            rec = {"id": ids[i], "logscores": scores.values[i]}
            if labels is not None:
                rec["label"] = int(labels.labels[i])
            yield rec

    _write_lines(path, {"kind": SCORES, "version": FORMAT_VERSION,
                        "class_names": list(scores.class_names)}, records())


def ingest_token_scores(path) -> LogScoreMatrix:
    """Read per-token label log-probs and sum them into one log-score per class."""
    matrix, _ = read_token_scores(path)
    return matrix


def read_token_scores(path) -> tuple[LogScoreMatrix, Optional[LabelVector]]:
    lines = _iter_lines(path)
    _, names = _read_header(lines, (TOKEN_SCORES,), path)
    k = len(names)
    ids, rows, labels, seen = [], [], [], set()
    for lineno, rec in lines:
        ids.append(_record_id(rec, lineno, seen))
        tokens = rec.get("tokens")
        if isinstance(tokens, dict):
            if set(tokens) != set(names):
                raise SchemaError("'tokens' keys must match class_names", lineno)
            tokens = [tokens[c] for c in names]
        if not isinstance(tokens, list) or len(tokens) != k:
            raise SchemaError(f"'tokens' must hold {k} per-class lists", lineno)
        row = []
        for c, seq in zip(names, tokens):
            if not isinstance(seq, list):
                raise SchemaError(f"tokens for class {c!r} must be a list", lineno)
            if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in seq):
                raise SchemaError(f"tokens for class {c!r} must be numbers", lineno)
            try:
                row.append(compose_label_score(seq))
            except EmptyLabel as exc:
                raise EmptyLabel(f"line {lineno}: class {c!r}: {exc}") from exc
            except InvalidTokenProb as exc:
                raise InvalidTokenProb(f"line {lineno}: class {c!r}: {exc}") from exc
        rows.append(row)
        labels.append(_record_label(rec, k, lineno))
    if not rows:
        raise SchemaError(f"{path}: no records after the header")
    return LogScoreMatrix(np.array(rows), names, tuple(ids)), _collect_labels(labels, k, path)


def write_posteriors(posteriors: PosteriorMatrix, path, labels: Optional[LabelVector] = None):
    ids = posteriors.ids or tuple(f"r{i}" for i in range(posteriors.n))

    def records():
        for i in range(posteriors.n):
            rec = {"id": ids[i], "probs": posteriors.values[i]}
            if labels is not None:
                rec["label"] = int(labels.labels[i])
            yield rec

    _write_lines(path, {"kind": POSTERIORS, "version": FORMAT_VERSION,
                        "class_names": list(posteriors.class_names)}, records())


def read_posteriors(path) -> tuple[PosteriorMatrix, Optional[LabelVector]]:
    """Read a posterior file; every row must sum to one within 1e-9."""
    lines = _iter_lines(path)
    _, names = _read_header(lines, (POSTERIORS,), path)
    k = len(names)
    ids, rows, labels, seen = [], [], [], set()
    for lineno, rec in lines:
        ids.append(_record_id(rec, lineno, seen))
        row = _number_row(rec.get("probs"), k, "probs", lineno)
        try:
            PosteriorMatrix(np.array([row]), names)
        except InvalidPosteriors as exc:
            raise SchemaError(f"invalid posterior row: {exc}", lineno) from exc
        rows.append(row)
        labels.append(_record_label(rec, k, lineno))
    if not rows:
        raise SchemaError(f"{path}: no records after the header")
    return PosteriorMatrix(np.array(rows), names, tuple(ids)), _collect_labels(labels, k, path)


def read_scores_or_posteriors(path):
    """Read either file kind; score files are normalized into posteriors."""
    lines = _iter_lines(path)
    kind, _ = _read_header(lines, (SCORES, POSTERIORS, TOKEN_SCORES), path)
    lines.close()
    if kind == POSTERIORS:
        return read_posteriors(path)
    if kind == TOKEN_SCORES:
        scores, labels = read_token_scores(path)
    else:
        scores, labels = read_scores(path)
    return normalize_scores(scores), labels


def prior_to_dict(prior: PriorVector, class_names=None) -> dict:
    out = {"probs": prior.probs}
    if class_names is not None:
        out["class_names"] = list(class_names)
    return out


def write_prior(prior: PriorVector, path, class_names=None):
    write_json(prior_to_dict(prior, class_names), path)


def read_prior(path, class_names=None) -> PriorVector:
    """Read a prior file; reorder by name when both sides carry class names."""
    d = read_json(path)
    if not isinstance(d, dict) or "probs" not in d:
        raise SchemaError(f"{path}: prior file needs a 'probs' list")
    probs = d["probs"]
    names = d.get("class_names")
    if class_names is not None and names is not None:
        if set(names) != set(class_names) or len(names) != len(class_names):
            raise SchemaError(f"{path}: prior classes {names} do not match {list(class_names)}")
        lookup = dict(zip(names, probs))
        probs = [lookup[c] for c in class_names]
    try:
        return PriorVector(np.array(probs, dtype=np.float64))
    except (PriorShiftError, ValueError, TypeError) as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def params_to_dict(params: AffineParams, class_names=None) -> dict:
    out = {
        "alpha": params.alpha,
        "beta": params.beta,
        "mode": params.mode.value,
        "converged": params.converged,
        "iterations": params.iterations,
    }
    if params.loss is not None:
        out["loss"] = params.loss
    if class_names is not None:
        out["class_names"] = list(class_names)
    return out


def write_params(params: AffineParams, path, class_names=None):
    write_json(params_to_dict(params, class_names), path)


def read_params(path) -> AffineParams:
    d = read_json(path)
    try:
        return AffineParams(
            d["alpha"], np.array(d["beta"], dtype=np.float64), CalibrationMode(d.get("mode", "affine")),
            d.get("loss"), int(d.get("iterations", 0)), bool(d.get("converged", True)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: invalid parameter file: {exc}") from exc


def report_to_json(report: EvaluationReport) -> str:
    return dumps(report.to_dict(), indent=2) + "\n"


def write_report(report: EvaluationReport, path):
    text = report_to_json(report)
    with _open(path, "w") as f:
        f.write(text)


def read_report(path) -> EvaluationReport:
    d = read_json(path)
    try:
        return EvaluationReport.from_dict(d)
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"{path}: invalid report: {exc}") from exc


def ensure_parent(path):
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)
