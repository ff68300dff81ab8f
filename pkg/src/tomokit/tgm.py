"""TGM container: one JSON header line plus a raw little-endian payload.

Layout::

    line 1   UTF-8 JSON, '\\n'-terminated:
             {"kind", "dim", "shape", "origin", "spacing",
              "dtype": "f64" | "c128", "extra": {...}}
    body     row-major IEEE-754 doubles; complex data is interleaved
             (re, im) pairs.

Round trips are bit-exact: the payload is written verbatim and JSON floats
use shortest round-trip representation.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import FormatError
from .grid import GridGeometry, ScalarField

__all__ = ["write_tgm", "read_tgm", "write_field", "read_field", "KNOWN_KINDS"]

KNOWN_KINDS = (
    "field",
    "sinogram",
    "m2",
    "curved-tomogram",
    "sphere-means",
    "density-matrix",
    "quadrature-tomograms",
    "scan",
    "line-tomograms",
)

_DTYPES = {"f64": np.dtype("<f8"), "c128": np.dtype("<c16")}


def write_tgm(
    path,
    kind: str,
    dim: int,
    shape,
    origin,
    spacing,
    payload: np.ndarray,
    extra: dict | None = None,
) -> None:
    if kind not in KNOWN_KINDS:
        raise FormatError(f"unknown TGM kind {kind!r}")
    arr = np.asarray(payload)
    if arr.dtype.kind == "c":
        dtype_tag = "c128"
        arr = arr.astype(np.complex128, copy=False)
    else:
        dtype_tag = "f64"
        arr = arr.astype(np.float64, copy=False)
    shape = [int(s) for s in shape]
    if int(np.prod(shape)) != arr.size:
        raise FormatError("payload size does not match declared shape")
    header = {
        "kind": kind,
        "dim": int(dim),
        "shape": shape,
        "origin": [float(v) for v in origin],
        "spacing": [float(v) for v in spacing],
        "dtype": dtype_tag,
        "extra": extra or {},
    }
    body = np.ascontiguousarray(arr.reshape(shape)).astype(_DTYPES[dtype_tag], copy=False)
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("utf-8"))
        fh.write(b"\n")
        fh.write(body.tobytes())


def read_tgm(path) -> tuple[dict, np.ndarray]:
    """Returns ``(header, payload)``; the payload has the declared shape."""
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise FormatError("missing header line")
    try:
        header = json.loads(raw[:nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"invalid JSON header: {exc}") from exc
    for key in ("kind", "dim", "shape", "origin", "spacing", "dtype"):
        if key not in header:
            raise FormatError(f"header misses required field {key!r}")
    if header["kind"] not in KNOWN_KINDS:
        raise FormatError(f"unknown TGM kind {header['kind']!r}")
    if header["dtype"] not in _DTYPES:
        raise FormatError(f"unknown dtype tag {header['dtype']!r}")
    dtype = _DTYPES[header["dtype"]]
    shape = tuple(int(s) for s in header["shape"])
    expected = int(np.prod(shape)) * dtype.itemsize
    body = raw[nl + 1 :]
    if len(body) != expected:
        raise FormatError(
            f"payload has {len(body)} bytes, header implies {expected}"
        )
    arr = np.frombuffer(body, dtype=dtype).reshape(shape)
    header.setdefault("extra", {})
    return header, arr.copy()


def write_field(path, field: ScalarField, kind: str = "field", extra: dict | None = None) -> None:
    merged = {"support_radius": field.support_radius}
    merged.update(extra or {})
    write_tgm(
        path,
        kind,
        field.dim,
        field.shape,
        field.origin,
        field.spacing,
        field.values,
        merged,
    )


def read_field(path, expect_kind: str | None = "field") -> ScalarField:
    header, payload = read_tgm(path)
    if expect_kind is not None and header["kind"] != expect_kind:
        raise FormatError(f"expected kind {expect_kind!r}, found {header['kind']!r}")
    geom = GridGeometry(tuple(header["origin"]), tuple(header["spacing"]), payload.shape)
    sr = float(header.get("extra", {}).get("support_radius", 0.0))
    return ScalarField(geom, payload, sr)
