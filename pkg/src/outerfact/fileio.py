"""JSON coefficient and matrix files.

Coefficient files::

    {"dims": d, "block_size": h, "degree": [n_1, ...], "kind": "laurent",
     "coeffs": [{"index": [k_1, ...], "re": [[...]], "im": [[...]]}, ...]}

Laurent files hold the canonical half of the exponents only.  Analytic files
may carry a rectangular factor; ``out_size`` then gives the row count and
``block_size`` the column count.

Matrix files: ``{"rows": m, "cols": n, "re": [[...]], "im": [[...]]}``.

A path of ``"-"`` reads standard input or writes standard output.
"""

from __future__ import annotations

import json
import sys

import numpy as np

from .errors import ValidationError
from .trigpoly import AnalyticPoly, LaurentPoly


def _load(path):
    try:
        if str(path) == "-":
            return json.load(sys.stdin)
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not valid JSON: {exc}") from None


def _dump(obj, path):
    text = json.dumps(obj, sort_keys=True, indent=1)
    if str(path) == "-":
        sys.stdout.write(text + "\n")
        return
    try:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    except OSError as exc:
        raise ValidationError(f"cannot write {path}: {exc}") from None


def _matrix(entry, shape, where):
    try:
        re = np.asarray(entry["re"], dtype=float)
        im = np.asarray(entry.get("im", np.zeros(shape)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"{where}: bad matrix entry ({exc})") from None
    re, im = re.reshape(re.shape or (1,)), im.reshape(im.shape or (1,))
    if re.ndim == 1 and shape == (1, 1):
        re, im = re.reshape(1, -1), im.reshape(1, -1)
    if re.shape != shape or im.shape != shape:
        raise ValidationError(f"{where}: expected shape {shape}, got {re.shape} / {im.shape}")
    return re + 1j * im


def _encode(M):
    M = np.asarray(M, dtype=complex)
    return M.real.tolist(), M.imag.tolist()


def poly_to_dict(poly) -> dict:
    if isinstance(poly, LaurentPoly):
        kind, items = "laurent", poly.canonical_items()
        rows, cols = poly.h, poly.h
    elif isinstance(poly, AnalyticPoly):
        kind, items = "analytic", poly.items()
        rows, cols = poly.h_out, poly.h_in
    else:
        raise TypeError(f"cannot serialize {type(poly).__name__}")
    coeffs = []
    for k, v in items:
        re, im = _encode(v)
        coeffs.append({"index": list(k), "re": re, "im": im})
    out = {"dims": poly.d, "block_size": cols, "degree": list(poly.degree),
           "kind": kind, "coeffs": coeffs}
    if rows != cols:
        out["out_size"] = rows
    return out


def poly_from_dict(obj: dict):
    try:
        d = int(obj["dims"])
        h = int(obj["block_size"])
        degree = [int(x) for x in obj["degree"]]
        kind = obj["kind"]
        entries = obj["coeffs"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed coefficient file: missing or bad field {exc}") from None
    if kind not in ("laurent", "analytic"):
        raise ValidationError(f"unknown kind {kind!r}")
    if len(degree) != d:
        raise ValidationError(f"degree {degree} does not have {d} entries")
    rows = int(obj.get("out_size", h))
    if kind == "laurent" and rows != h:
        raise ValidationError("Laurent coefficients must be square")
    coeffs = {}
    for n, entry in enumerate(entries):
        try:
            k = tuple(int(x) for x in entry["index"])
        except (KeyError, TypeError, ValueError):
            raise ValidationError(f"coefficient {n}: bad index") from None
        if len(k) != d:
            raise ValidationError(f"coefficient {n}: index {list(k)} does not have {d} entries")
        if k in coeffs:
            raise ValidationError(f"duplicate index {list(k)}")
        coeffs[k] = _matrix(entry, (rows, h), f"coefficient {list(k)}")
    if not coeffs:
        raise ValidationError("coefficient list is empty")
    if kind == "laurent":
        return LaurentPoly(coeffs, degree=degree)
    return AnalyticPoly(coeffs, degree=degree)


def read_poly(path):
    return poly_from_dict(_load(path))


def write_poly(poly, path):
    _dump(poly_to_dict(poly), path)


def read_matrix(path) -> np.ndarray:
    obj = _load(path)
    try:
        shape = (int(obj["rows"]), int(obj["cols"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed matrix file: {exc}") from None
    return _matrix(obj, shape, "matrix")


def write_matrix(M, path):
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    re, im = _encode(M)
    _dump({"rows": M.shape[0], "cols": M.shape[1], "re": re, "im": im}, path)


def write_json(obj, path):
    _dump(obj, path)
