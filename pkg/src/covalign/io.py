"""File formats: matrix CSV, instance metadata JSON, and result documents.

Matrices travel as headerless CSV, d lines of d comma-separated decimal
reals.  Floats are written with Python's shortest round-trip repr, so a
write/read cycle reproduces the float64 bits exactly and the files stay
diff-able.  Everything else (instance metadata, alignment results) is JSON.
"""

from __future__ import annotations

import json
import math
import os
from typing import Any

import numpy as np

from . import linalg
from .errors import FileFormatError, NotSymmetric
from .linalg import Matrix, Perm

__all__ = [
    "TRIAL_COLUMNS",
    "format_float",
    "write_matrix_csv",
    "read_matrix_csv",
    "write_meta_json",
    "read_meta_json",
    "result_document",
]

#: results-CSV column order; the sweep writer and the resume reader both
#: key on this exact layout.
TRIAL_COLUMNS = (
    "estimator",
    "d",
    "m",
    "n",
    "seed",
    "epsilon",
    "frob_loss_sq",
    "nf_loss_sq",
    "trace_loss",
    "hamming",
    "objective",
    "iterations",
    "converged",
    "runtime_ms",
    "status",
)


def format_float(value: float) -> str:
    """Shortest decimal that parses back to the identical float64.

    Integral values drop the trailing ".0" (1.0 prints as "1"); both forms
    round-trip, and the bare form keeps whole-number matrices readable.
    """
    out = repr(float(value))
    return out[:-2] if out.endswith(".0") else out


def write_matrix_csv(path: str, a: np.ndarray) -> None:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix CSV files hold square matrices")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for row in a:
            fh.write(",".join(format_float(v) for v in row))
            fh.write("\n")


def read_matrix_csv(path: str) -> Matrix:
    """Load and validate a matrix CSV.

    Enforces the full format contract: square, finite reals, symmetric to
    1e-9 relative (the returned matrix is the symmetrized load).

    Raises
    ------
    FileFormatError
        On any violation; the message names the file and the defect.
    """
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    except (OSError, UnicodeDecodeError) as exc:
        raise FileFormatError(f"cannot read {path}: {exc}") from exc
    if not lines:
        raise FileFormatError(f"{path}: empty matrix file")
    d = len(lines)
    out = np.empty((d, d), dtype=np.float64)
    for i, line in enumerate(lines):
        fields = line.split(",")
        if len(fields) != d:
            raise FileFormatError(
                f"{path}: row {i} has {len(fields)} fields, expected {d} "
                f"({d} lines make a {d}x{d} matrix)"
            )
        for j, field in enumerate(fields):
            try:
                value = float(field)
            except ValueError as exc:
                raise FileFormatError(
                    f"{path}: row {i} field {j}: {field!r} is not a decimal real"
                ) from exc
            if not math.isfinite(value):
                raise FileFormatError(
                    f"{path}: row {i} field {j}: non-finite value {field!r}"
                )
            out[i, j] = value
    try:
        return linalg.as_symmetric(out)
    except NotSymmetric as exc:
        raise FileFormatError(f"{path}: {exc}") from exc


def write_meta_json(path: str, spec: Any, pi_star: Perm,
                    sigma_file: str) -> None:
    """Instance metadata: the generating spec, the true permutation, and a
    relative reference to the sigma matrix file.

    pi_star lives here and never inside the matrix files, so estimators fed
    the covariance CSVs cannot see the answer.
    """
    from dataclasses import asdict  # stdlib; local to keep module imports flat

    doc = {
        "version": _version(),
        "spec": asdict(spec),
        "pi_star": [int(v) for v in pi_star],
        "sigma_file": sigma_file,
    }
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def read_meta_json(path: str):
    """Inverse of `write_meta_json`.

    Returns (spec, pi_star, sigma_path) with sigma_path resolved against
    the metadata file's own directory.

    Raises
    ------
    FileFormatError
        Unreadable file, invalid JSON, or a pi_star that is not a
        permutation.
    """
    from .instances import InstanceSpec  # deferred: instances reads files via io

    try:
        with open(path, "r", encoding="ascii") as fh:
            doc = json.load(fh)
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FileFormatError(f"cannot read {path}: {exc}") from exc
    try:
        spec = InstanceSpec(**doc["spec"])
        pi_star = np.asarray(doc["pi_star"], dtype=np.int64)
        sigma_file = doc["sigma_file"]
    except (KeyError, TypeError) as exc:
        raise FileFormatError(f"{path}: missing or malformed field: {exc}") from exc
    if not linalg.is_permutation(pi_star):
        raise FileFormatError(f"{path}: pi_star is not a permutation")
    sigma_path = os.path.join(os.path.dirname(os.path.abspath(path)), sigma_file)
    return spec, pi_star, sigma_path


def result_document(estimator: str, permutation: Perm, objective: float,
                    diagnostics: dict, losses: dict | None = None) -> dict:
    """Assemble the JSON document an alignment run emits.

    The losses block is present only when ground truth was supplied.
    """
    permutation = np.asarray(permutation)
    if not linalg.is_permutation(permutation):
        raise ValueError("result permutation is not a bijection")
    doc: dict = {
        "estimator": estimator,
        "d": int(permutation.size),
        "permutation": [int(v) for v in permutation],
        "objective": float(objective),
    }
    if losses is not None:
        doc["losses"] = losses
    doc["diagnostics"] = diagnostics
    doc["version"] = _version()
    return doc


def _version() -> str:
    from . import __version__

    return __version__
