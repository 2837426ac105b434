"""File formats: JSON for vectors, matrices and wavefunctions, CSV for samples and plot data.

Every writer goes through a temporary file in the target directory followed
by :func:`os.replace`, so readers never see a partially written file.
"""

import csv
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from ._validation import DomainError

__all__ = [
    "ParseError",
    "load_json",
    "dumps",
    "probvec_to_dict",
    "read_probvecs",
    "density_to_dict",
    "density_from_dict",
    "read_density_matrices",
    "read_tomogram_samples",
    "write_text_atomic",
    "write_json_atomic",
    "write_csv_atomic",
]


class ParseError(DomainError):
    """An input file is unreadable or does not follow its format."""


def load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: malformed JSON ({exc})") from None
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None


def dumps(obj):
    """Canonical JSON: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def probvec_to_dict(p):
    p = np.asarray(p, dtype=float)
    return {"dim": int(p.size), "components": p.tolist()}


def _probvec_from_dict(data, where):
    if not isinstance(data, dict) or "components" not in data:
        raise ParseError(f"{where}: expected an object with 'components'")
    try:
        p = np.asarray(data["components"], dtype=float)
    except (TypeError, ValueError):
        raise ParseError(f"{where}: components must be numbers") from None
    if p.ndim != 1:
        raise ParseError(f"{where}: components must be a flat list")
    if "dim" in data and data["dim"] != p.size:
        raise ParseError(f"{where}: dim {data['dim']} but {p.size} components")
    return p


def read_probvecs(path):
    """One vector object or a list of them. Values are not yet validated as probabilities."""
    data = load_json(path)
    items = data if isinstance(data, list) else [data]
    if not items:
        raise ParseError(f"{path}: empty list")
    return [_probvec_from_dict(d, f"{path}[{i}]") for i, d in enumerate(items)]


def _complex_matrix(data, where):
    try:
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError, ValueError):
        raise ParseError(f"{where}: expected numeric 're' and 'im' arrays") from None
    if re.ndim != 2 or re.shape != im.shape or re.shape[0] != re.shape[1]:
        raise ParseError(f"{where}: 're'/'im' must be equal square matrices")
    if "dim" in data and data["dim"] != re.shape[0]:
        raise ParseError(f"{where}: dim {data['dim']} but matrix is {re.shape[0]} x {re.shape[0]}")
    return re + 1j * im


def density_to_dict(m):
    m = np.asarray(m, dtype=complex)
    return {"dim": int(m.shape[0]), "re": m.real.tolist(), "im": m.imag.tolist()}


def density_from_dict(data, where="matrix"):
    if not isinstance(data, dict):
        raise ParseError(f"{where}: expected an object with 're' and 'im'")
    return _complex_matrix(data, where)


def read_density_matrices(path):
    data = load_json(path)
    items = data if isinstance(data, list) else [data]
    if not items:
        raise ParseError(f"{path}: empty list")
    return [density_from_dict(d, f"{path}[{i}]") for i, d in enumerate(items)]


def read_tomogram_samples(path):
    """List of ``{"unitary": matrix, "probvec": vector}`` pairs for reconstruction."""
    data = load_json(path)
    if not isinstance(data, list):
        raise ParseError(f"{path}: expected a list of {{unitary, probvec}} objects")
    out = []
    for i, item in enumerate(data):
        if not isinstance(item, dict) or not {"unitary", "probvec"} <= item.keys():
            raise ParseError(f"{path}[{i}]: needs 'unitary' and 'probvec'")
        out.append((density_from_dict(item["unitary"], f"{path}[{i}].unitary"),
                    _probvec_from_dict(item["probvec"], f"{path}[{i}].probvec")))
    return out


def write_text_atomic(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise
    return path


def write_json_atomic(path, obj):
    return write_text_atomic(path, dumps(obj))


def write_csv_atomic(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows([repr(float(v)) for v in row] for row in rows)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise
    return path
