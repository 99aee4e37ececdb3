"""JSON encoding of operators, bases, POVMs and instruments.

Complex numbers are ``[re, im]`` pairs and matrices are row-major nested lists.
Outcome labels in files are implicit in list order (first entry is outcome 1).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .measurement import BasisPair, JointPovm, ProjectiveBasis
from .instruments import Instrument


class FormatError(ValueError):
    """Input document does not follow the expected schema."""


def encode_complex(arr) -> list:
    arr = np.asarray(arr, dtype=complex)
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


def decode_complex(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] != 2:
        raise FormatError("complex entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def _dim(doc: dict, key: str) -> int:
    try:
        return int(doc["dim"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{key} document needs an integer 'dim'") from exc


def _field(doc: dict, key: str):
    if not isinstance(doc, dict) or key not in doc:
        raise FormatError(f"missing field {key!r}")
    return doc[key]


def basis_to_json(basis: ProjectiveBasis) -> dict:
    return {"dim": basis.dim, "basis": encode_complex(basis.vectors)}


def basis_from_json(doc: dict) -> ProjectiveBasis:
    n = _dim(doc, "basis")
    vecs = decode_complex(_field(doc, "basis"))
    if vecs.shape != (n, n):
        raise FormatError(f"basis must hold {n} vectors of length {n}")
    return ProjectiveBasis(vecs)


def pair_to_json(pair: BasisPair) -> dict:
    return {
        "dim": pair.dim,
        "unbarred": encode_complex(pair.unbarred.vectors),
        "barred": encode_complex(pair.barred.vectors),
    }


def pair_from_json(doc: dict) -> BasisPair:
    n = _dim(doc, "pair")
    bases = []
    for key in ("unbarred", "barred"):
        vecs = decode_complex(_field(doc, key))
        if vecs.shape != (n, n):
            raise FormatError(f"{key} basis must hold {n} vectors of length {n}")
        bases.append(ProjectiveBasis(vecs))
    return BasisPair(*bases)


def povm_elements_from_json(doc: dict) -> np.ndarray:
    """Raw element grid, unvalidated, so that violations can be reported."""
    n = _dim(doc, "POVM")
    el = decode_complex(_field(doc, "elements"))
    if el.shape != (n, n, n, n):
        raise FormatError(f"elements must be a {n}x{n} grid of {n}x{n} matrices, got shape {el.shape[:4]}")
    return el


def povm_to_json(povm: JointPovm) -> dict:
    return {"dim": povm.dim, "elements": encode_complex(povm.elements)}


def povm_from_json(doc: dict) -> JointPovm:
    return JointPovm(povm_elements_from_json(doc))


def instrument_to_json(instr: Instrument) -> dict:
    return {"dim": instr.dim, "families": [encode_complex(f) for f in instr.families]}


def instrument_from_json(doc: dict) -> Instrument:
    n = _dim(doc, "instrument")
    fams = []
    for a, fam in enumerate(_field(doc, "families")):
        f = decode_complex(fam)
        if f.ndim != 3 or f.shape[1:] != (n, n):
            raise FormatError(f"family {a + 1} must be a list of {n}x{n} matrices")
        fams.append(f)
    return Instrument(tuple(fams))


def matrix_from_json(doc) -> np.ndarray:
    """A bare nested matrix or ``{"matrix": ...}``."""
    data = doc["matrix"] if isinstance(doc, dict) and "matrix" in doc else doc
    return decode_complex(data)


def load_json(path: str | Path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def dump_json(doc, path: str | Path | None = None) -> str:
    text = json.dumps(doc, indent=2, allow_nan=False)
    if path is not None:
        Path(path).write_text(text + "\n", encoding="utf-8")
    return text
