"""Lossless JSON encoding of networks.

Every float is stored as a hexadecimal literal (``float.hex``), so a round
trip reproduces the exact bits.  Output is canonical: serializing a parsed
file reproduces its bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import NetworkFormatError
from .network import AffineLayer, ReluNetwork

FORMAT_VERSION = 1


def to_json(net: ReluNetwork) -> str:
    layers = []
    for layer in net.layers:
        layers.append({
            "rows": layer.rows,
            "cols": layer.cols,
            "weights": [float(v).hex() for v in layer.weights.ravel()],
            "bias": [float(v).hex() for v in layer.bias],
        })
    doc = {
        "format_version": FORMAT_VERSION,
        "input_dim": net.input_dim,
        "layers": layers,
        "metadata": net.metadata,
    }
    return json.dumps(doc, sort_keys=True, indent=1, allow_nan=False) + "\n"


def _hex_list(values, n, where):
    if not isinstance(values, list):
        raise NetworkFormatError("expected a list of hex floats", where)
    if len(values) != n:
        raise NetworkFormatError(f"expected {n} entries, found {len(values)}", where)
    out = np.empty(n)
    for i, v in enumerate(values):
        if not isinstance(v, str):
            raise NetworkFormatError("expected a hex float string", f"{where}[{i}]")
        try:
            out[i] = float.fromhex(v)
        except ValueError:
            raise NetworkFormatError(f"invalid hex float {v!r}", f"{where}[{i}]") from None
        if not np.isfinite(out[i]):
            raise NetworkFormatError("non-finite value", f"{where}[{i}]")
    return out


def _int_field(obj, key, where):
    val = obj.get(key)
    if not isinstance(val, int) or isinstance(val, bool) or val < 1:
        raise NetworkFormatError(f"'{key}' must be a positive integer", f"{where}.{key}")
    return val


def from_json(text: str) -> ReluNetwork:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(exc.msg, f"line {exc.lineno}:{exc.colno}") from None
    if not isinstance(doc, dict):
        raise NetworkFormatError("top level must be an object", "$")
    if doc.get("format_version") != FORMAT_VERSION:
        raise NetworkFormatError(
            f"unsupported format_version {doc.get('format_version')!r}", "$.format_version")
    input_dim = _int_field(doc, "input_dim", "$")
    raw = doc.get("layers")
    if not isinstance(raw, list) or not raw:
        raise NetworkFormatError("'layers' must be a non-empty list", "$.layers")
    layers = []
    prev = input_dim
    for k, entry in enumerate(raw):
        where = f"$.layers[{k}]"
        if not isinstance(entry, dict):
            raise NetworkFormatError("layer must be an object", where)
        rows = _int_field(entry, "rows", where)
        cols = _int_field(entry, "cols", where)
        if cols != prev:
            raise NetworkFormatError(f"cols={cols} but previous layer has {prev} outputs",
                                     f"{where}.cols")
        w = _hex_list(entry.get("weights"), rows * cols, f"{where}.weights")
        b = _hex_list(entry.get("bias"), rows, f"{where}.bias")
        layers.append(AffineLayer(w.reshape(rows, cols), b))
        prev = rows
    meta = doc.get("metadata", {})
    if not isinstance(meta, dict):
        raise NetworkFormatError("'metadata' must be an object", "$.metadata")
    return ReluNetwork(tuple(layers), meta)


def save(net: ReluNetwork, path) -> None:
    Path(path).write_text(to_json(net))


def load(path) -> ReluNetwork:
    return from_json(Path(path).read_text())
