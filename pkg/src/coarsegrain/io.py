"""JSON documents for states, channels and generator specs, and report output.

A document is a JSON object with a ``kind`` (``state``, ``channel``,
``tripartite_state`` or ``instance_spec``) and ``dims``. Complex matrices
are arrays of rows whose entries are ``[re, im]`` pairs. Floats are written
with ``repr`` so reading a written document gives back identical bits.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from . import linalg as la
from .channels import KrausMap
from .entropy import TripartiteState
from .errors import InvalidInputError

KINDS = ("state", "channel", "tripartite_state", "instance_spec")


class DocumentError(InvalidInputError):
    pass


# ----------------------------------------------------------------------
# matrices
# ----------------------------------------------------------------------


def encode_matrix(m) -> list:
    m = np.asarray(m, dtype=np.complex128)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def decode_matrix(obj, name: str = "matrix") -> np.ndarray:
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        raise DocumentError(f"{name}: expected a nonempty array of rows")
    cols = len(obj[0])
    if cols == 0 or any(len(r) != cols for r in obj):
        raise DocumentError(f"{name}: rows have inconsistent lengths")
    out = np.empty((len(obj), cols), dtype=np.complex128)
    for i, row in enumerate(obj):
        for j, z in enumerate(row):
            if (not isinstance(z, list) or len(z) != 2
                    or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in z)):
                raise DocumentError(f"{name}[{i}][{j}]: expected [re, im]")
            if not all(math.isfinite(x) for x in z):
                raise DocumentError(f"{name}[{i}][{j}]: non-finite entry")
            out[i, j] = complex(float(z[0]), float(z[1]))
    return out


# ----------------------------------------------------------------------
# documents
# ----------------------------------------------------------------------


def state_document(d, dims=None, seed=None) -> dict:
    d = la.as_square(d)
    doc = {"kind": "state", "dims": list(dims) if dims is not None else [d.shape[0]],
           "matrix": encode_matrix(d)}
    if seed is not None:
        doc["seed"] = int(seed)
    return doc


def tripartite_document(s: TripartiteState, seed=None) -> dict:
    doc = {"kind": "tripartite_state", "dims": list(s.dims), "matrix": encode_matrix(s.density)}
    if seed is not None:
        doc["seed"] = int(seed)
    return doc


def channel_document(t: KrausMap, seed=None) -> dict:
    doc = {"kind": "channel", "dims": [t.in_dim, t.out_dim],
           "kraus": [encode_matrix(c) for c in t.coeffs]}
    if seed is not None:
        doc["seed"] = int(seed)
    return doc


def instance_spec_document(generator: str, params: dict, seed: int) -> dict:
    return {"kind": "instance_spec", "dims": [], "generator": generator,
            "params": params, "seed": int(seed)}


def _check_dims_field(doc) -> list:
    dims = doc.get("dims")
    if not isinstance(dims, list) or not all(isinstance(x, int) and not isinstance(x, bool)
                                             for x in dims):
        raise DocumentError("dims must be an array of integers")
    if any(x < 1 for x in dims):
        raise DocumentError("dims entries must be positive")
    return dims


def validate_document(doc) -> dict:
    """Check a parsed document against the format; returns it unchanged."""
    if not isinstance(doc, dict):
        raise DocumentError("document must be a JSON object")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise DocumentError(f"unknown kind {kind!r}")
    seed = doc.get("seed")
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool) or seed < 0):
        raise DocumentError("seed must be an unsigned integer")
    if kind == "instance_spec":
        if not isinstance(doc.get("generator"), str) or not isinstance(doc.get("params"), dict):
            raise DocumentError("instance_spec needs a generator name and a params object")
        return doc
    dims = _check_dims_field(doc)
    if kind == "channel":
        if len(dims) != 2:
            raise DocumentError("channel dims must be [in_dim, out_dim]")
        kraus = doc.get("kraus")
        if not isinstance(kraus, list) or not kraus:
            raise DocumentError("channel needs a nonempty kraus array")
        for i, k in enumerate(kraus):
            m = decode_matrix(k, f"kraus[{i}]")
            if m.shape != (dims[1], dims[0]):
                raise DocumentError(f"kraus[{i}] has shape {m.shape}, expected {(dims[1], dims[0])}")
        return doc
    if not dims:
        raise DocumentError("dims must be nonempty")
    if kind == "tripartite_state" and len(dims) != 3:
        raise DocumentError("tripartite_state needs exactly three dims")
    m = decode_matrix(doc.get("matrix"), "matrix")
    n = int(np.prod(dims))
    if m.shape != (n, n):
        raise DocumentError(f"matrix has shape {m.shape}, dims imply {(n, n)}")
    return doc


def dumps_document(doc: dict) -> str:
    """Serialize with one matrix row per line."""
    def enc(value, indent):
        pad = " " * indent
        if _is_matrix(value):
            rows = [json.dumps(r) for r in value]
            return "[\n" + ",\n".join(pad + "  " + r for r in rows) + "\n" + pad + "]"
        if isinstance(value, list) and value and all(_is_matrix(v) for v in value):
            return "[\n" + ",\n".join(pad + "  " + enc(v, indent + 2) for v in value) + "\n" + pad + "]"
        return json.dumps(value, sort_keys=True)

    lines = [f'  {json.dumps(k)}: {enc(v, 2)}' for k, v in doc.items()]
    return "{\n" + ",\n".join(lines) + "\n}\n"


def _is_matrix(v) -> bool:
    return (isinstance(v, list) and v and isinstance(v[0], list) and v[0]
            and isinstance(v[0][0], list))


def loads_document(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"not valid JSON: {exc}") from None
    return validate_document(doc)


def read_document(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DocumentError(f"cannot read {path}: {exc.strerror}") from None
    return loads_document(text)


def write_document(path, doc: dict) -> None:
    validate_document(doc)
    Path(path).write_text(dumps_document(doc))


def _expect(doc: dict, kind: str) -> dict:
    if doc["kind"] != kind:
        raise DocumentError(f"expected a {kind} document, got {doc['kind']}")
    return doc


def load_state(path) -> tuple[np.ndarray, list]:
    doc = _expect(read_document(path), "state")
    return la.check_density(decode_matrix(doc["matrix"])), doc["dims"]


def load_channel(path) -> KrausMap:
    doc = _expect(read_document(path), "channel")
    return KrausMap(tuple(decode_matrix(k) for k in doc["kraus"]))


def load_tripartite(path) -> TripartiteState:
    doc = _expect(read_document(path), "tripartite_state")
    return TripartiteState(decode_matrix(doc["matrix"]), tuple(doc["dims"]))


# ----------------------------------------------------------------------
# reports
# ----------------------------------------------------------------------


def fmt_float(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def dumps_report(obj, indent: int = 0) -> str:
    """JSON text with every float printed to 17 significant digits.

    Non-finite floats become the strings ``"inf"``, ``"-inf"``, ``"nan"``.
    """
    pad = " " * indent
    inner = " " * (indent + 2)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps_report(v, indent + 2)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(dumps_report(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + dumps_report(v, indent + 2) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return fmt_float(x) if math.isfinite(x) else json.dumps(fmt_float(x))
    if obj is None:
        return "null"
    return json.dumps(str(obj))
