"""File formats: instance, labeling, and result documents.

The instance format is the canonical interchange document

    {"num_nodes": N, "num_labels": K,
     "unary":  [{"node": int, "label": int, "weight": float}, ...],
     "binary": [{"i": int, "j": int, "weight": float}, ...]}

parsed strictly: unknown keys are rejected at every level.  All writes are
whole-file atomic (temp file + rename) and serialization is canonical
(sorted keys, fixed indentation), so identical inputs give byte-identical
files.  Result documents keep every timing field under the single "timing"
key so reproducibility checks can ignore it.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile

import numpy as np

from .errors import InvalidInputError
from .mrf import BinaryTerm, MrfInstance, UnaryTerm


def _canonical_dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _require_keys(doc: dict, required, optional=(), where="document"):
    if not isinstance(doc, dict):
        raise InvalidInputError(f"{where} must be an object")
    allowed = set(required) | set(optional)
    unknown = set(doc) - allowed
    if unknown:
        raise InvalidInputError(f"unknown keys in {where}: {sorted(unknown)}")
    missing = set(required) - set(doc)
    if missing:
        raise InvalidInputError(f"missing keys in {where}: {sorted(missing)}")


def _as_int(value, where):
    if isinstance(value, bool) or not isinstance(value, int):
        raise InvalidInputError(f"{where} must be an integer")
    return value


def _as_number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvalidInputError(f"{where} must be a number")
    return float(value)


def instance_to_doc(mrf: MrfInstance) -> dict:
    return {
        "num_nodes": mrf.num_nodes,
        "num_labels": mrf.num_labels,
        "unary": [
            {"node": t.node, "label": t.label, "weight": t.weight}
            for t in mrf.unary
        ],
        "binary": [
            {"i": t.i, "j": t.j, "weight": t.weight} for t in mrf.binary
        ],
    }


def instance_from_doc(doc) -> MrfInstance:
    _require_keys(doc, ["num_nodes", "num_labels", "unary", "binary"],
                  where="instance")
    if not isinstance(doc["unary"], list) or not isinstance(doc["binary"], list):
        raise InvalidInputError("unary/binary must be arrays")
    unary = []
    for e in doc["unary"]:
        _require_keys(e, ["node", "label", "weight"], where="unary term")
        unary.append(UnaryTerm(_as_int(e["node"], "node"),
                               _as_int(e["label"], "label"),
                               _as_number(e["weight"], "weight")))
    binary = []
    for e in doc["binary"]:
        _require_keys(e, ["i", "j", "weight"], where="binary term")
        binary.append(BinaryTerm(_as_int(e["i"], "i"),
                                 _as_int(e["j"], "j"),
                                 _as_number(e["weight"], "weight")))
    return MrfInstance(
        num_nodes=_as_int(doc["num_nodes"], "num_nodes"),
        num_labels=_as_int(doc["num_labels"], "num_labels"),
        unary=tuple(unary),
        binary=tuple(binary),
    )


def dumps_instance(mrf: MrfInstance) -> str:
    return _canonical_dumps(instance_to_doc(mrf))


def save_instance(mrf: MrfInstance, path: str) -> None:
    atomic_write_text(path, dumps_instance(mrf))


def _load_json(path: str):
    try:
        with open(path) as handle:
            return json.load(handle)
    except FileNotFoundError as exc:
        raise InvalidInputError(f"no such file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"malformed JSON in {path}: {exc}") from exc


def load_instance(path: str) -> MrfInstance:
    return instance_from_doc(_load_json(path))


def instance_sha256(mrf: MrfInstance) -> str:
    return hashlib.sha256(dumps_instance(mrf).encode()).hexdigest()


def dumps_labeling(labels) -> str:
    return _canonical_dumps({"labels": [int(v) for v in np.asarray(labels)]})


def save_labeling(labels, path: str) -> None:
    atomic_write_text(path, dumps_labeling(labels))


def load_labeling(path: str) -> np.ndarray:
    doc = _load_json(path)
    _require_keys(doc, ["labels"], where="labeling")
    if not isinstance(doc["labels"], list):
        raise InvalidInputError("labels must be an array")
    return np.array([_as_int(v, "label") for v in doc["labels"]], dtype=int)


RESULT_SCHEMA = "mrfsdp-result-v1"


def dumps_result(doc: dict) -> str:
    return _canonical_dumps(doc)


def save_result(doc: dict, path: str) -> None:
    atomic_write_text(path, dumps_result(doc))


def load_result(path: str) -> dict:
    doc = _load_json(path)
    if not isinstance(doc, dict) or doc.get("schema") != RESULT_SCHEMA:
        raise InvalidInputError(f"not a {RESULT_SCHEMA} document: {path}")
    return doc


def strip_timing(doc: dict) -> dict:
    """Copy of a result document with every timing field removed."""
    out = {k: v for k, v in doc.items() if k != "timing"}
    return out
