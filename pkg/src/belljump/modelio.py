"""JSON import/export of models.

Document layout::

    {
      "name": "two_level",              # optional
      "t_end": 3.14159,                 # optional default horizon
      "dim": 2,
      "hamiltonian": [[re, im], ...],   # dim*dim entries, row-major
      "povm": [{"label": "0", "matrix": [[re, im], ...]}, ...],
      "psi0": [[re, im], ...]
    }

Matrices are flat row-major lists of ``[re, im]`` pairs; nested row lists
are accepted on input. Every validation error cites the JSON path of the
offending entry.
"""

from __future__ import annotations

import json
import math
import re
from pathlib import Path

import numpy as np

from .hilbert import HermitianOperator, Povm, StateVector, ValidationError
from .models import ModelSpec


def _pairs(z) -> list:
    return [[float(v.real), float(v.imag)] for v in np.ravel(z)]


def model_to_dict(model: ModelSpec) -> dict:
    return {
        "name": model.name,
        "t_end": model.t_end,
        "dim": model.dim,
        "hamiltonian": _pairs(model.H.entries),
        "povm": [
            {"label": str(lab), "matrix": _pairs(el)}
            for lab, el in zip(model.pov.labels, model.pov.elements)
        ],
        "psi0": _pairs(model.psi0.amplitudes),
    }


def _complex(entry, path: str) -> complex:
    if (
        not isinstance(entry, (list, tuple))
        or len(entry) != 2
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in entry)
    ):
        raise ValidationError("expected a [re, im] pair of numbers", path)
    if not all(math.isfinite(v) for v in entry):
        raise ValidationError("non-finite number", path)
    return complex(entry[0], entry[1])


def _vector(data, n: int, path: str) -> np.ndarray:
    if not isinstance(data, list):
        raise ValidationError("expected an array", path)
    if len(data) != n:
        raise ValidationError(f"expected {n} entries, got {len(data)}", path)
    return np.array([_complex(e, f"{path}[{i}]") for i, e in enumerate(data)])


def _matrix(data, d: int, path: str) -> np.ndarray:
    if not isinstance(data, list):
        raise ValidationError("expected an array", path)
    nested = len(data) == d and all(
        isinstance(row, list) and row and isinstance(row[0], list) for row in data
    )
    if nested:
        return np.stack([_vector(row, d, f"{path}[{i}]") for i, row in enumerate(data)])
    return _vector(data, d * d, path).reshape(d, d)


def _relocate(err: ValidationError, prefix: str, d: int, nested: bool) -> ValidationError:
    """Map an in-memory path like ``H[i][j]`` onto the JSON document."""
    path = err.path or ""
    if "[" in path:
        head, _, rest = path.partition("[")
        idx = [int(p) for p in rest.rstrip("]").split("][") if p.isdigit()]
        if head in ("H", "matrix") and len(idx) == 2:
            i, j = idx
            loc = f"{prefix}[{i}][{j}]" if nested else f"{prefix}[{i * d + j}]"
            return ValidationError(str(err).split(": ", 1)[-1], loc)
    return ValidationError(str(err).split(": ", 1)[-1], prefix)


def model_from_dict(doc: dict, name: str = "custom") -> ModelSpec:
    if not isinstance(doc, dict):
        raise ValidationError("model document must be an object", "$")
    for key in ("dim", "hamiltonian", "povm", "psi0"):
        if key not in doc:
            raise ValidationError("missing field", f"$.{key}")
    d = doc["dim"]
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise ValidationError("dim must be a positive integer", "$.dim")
    h_nested = isinstance(doc["hamiltonian"], list) and len(doc["hamiltonian"]) == d and d > 1 and \
        all(isinstance(r, list) and r and isinstance(r[0], list) for r in doc["hamiltonian"])
    H = _matrix(doc["hamiltonian"], d, "$.hamiltonian")
    try:
        H = HermitianOperator(H)
    except ValidationError as err:
        raise _relocate(err, "$.hamiltonian", d, h_nested) from None
    povm = doc["povm"]
    if not isinstance(povm, list) or not povm:
        raise ValidationError("expected a non-empty array", "$.povm")
    labels, elements = [], []
    for k, item in enumerate(povm):
        if not isinstance(item, dict) or "label" not in item or "matrix" not in item:
            raise ValidationError("expected {label, matrix}", f"$.povm[{k}]")
        if not isinstance(item["label"], str):
            raise ValidationError("label must be a string", f"$.povm[{k}].label")
        labels.append(item["label"])
        elements.append(_matrix(item["matrix"], d, f"$.povm[{k}].matrix"))
    try:
        pov = Povm(labels, np.stack(elements))
    except ValidationError as err:
        msg = str(err).split(": ", 1)[-1]
        m = re.match(r"povm\[(\d+)\]\.matrix(?:\[(\d+)\]\[(\d+)\])?", err.path or "")
        if m is None:
            raise ValidationError(msg, "$.povm") from None
        k = int(m.group(1))
        loc = f"$.povm[{k}].matrix"
        if m.group(2) is not None:
            i, j = int(m.group(2)), int(m.group(3))
            raw = povm[k]["matrix"]
            nested = len(raw) == d and d > 1 and isinstance(raw[0], list) and raw[0] and isinstance(raw[0][0], list)
            loc += f"[{i}][{j}]" if nested else f"[{i * d + j}]"
        raise ValidationError(msg, loc) from None
    psi = _vector(doc["psi0"], d, "$.psi0")
    nrm = float(np.linalg.norm(psi))
    if abs(nrm - 1.0) > 1e-12:
        raise ValidationError(f"psi0 must be normalized (norm {nrm:.15g})", "$.psi0")
    t_end = doc.get("t_end", 1.0)
    if not isinstance(t_end, (int, float)) or not math.isfinite(t_end):
        raise ValidationError("t_end must be a finite number", "$.t_end")
    return ModelSpec(
        name=str(doc.get("name", name)),
        H=H,
        pov=pov,
        psi0=StateVector(psi),
        t_end=float(t_end),
    )


def save_model(model: ModelSpec, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n", encoding="utf-8")


def load_model(path) -> ModelSpec:
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"model file {str(p)!r} not found", "model")
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise ValidationError(f"invalid JSON: {err}", "$") from None
    return model_from_dict(doc, name=p.stem)
