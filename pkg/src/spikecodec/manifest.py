"""Network manifests (YAML) with raw little-endian weight blobs.

A manifest looks like::

    format: spikecodec-network/1
    encoding: {bits: 4}
    arch: {pe_rows: 4, pe_cols: 4, ...}
    seed: 7
    layers:
      - kind: conv2d
        in_shape: [2, 8, 8]
        out_shape: [4, 8, 8]
        kernel: [3, 3]
        stride: 1
        padding: 1
        theta: 1
        theta_dt: 40
        dt_delay: 16
        sgs_tau: 0.0
        blob: weights.bin
        offset: 0
        crc32: 0x1a2b3c4d

Blobs hold int32 ``(out, in, ky, kx)`` row-major. Input tensors use the same
container with ``dtype: u8``. Blob paths are relative to the manifest.
"""

from __future__ import annotations

import zlib
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np
import yaml

from spikecodec.codec import EncodingParams
from spikecodec.layers import LayerSpec
from spikecodec.network import NetworkSpec
from spikecodec.simulator import ArchConfig

NETWORK_FORMAT = "spikecodec-network/1"
TENSOR_FORMAT = "spikecodec-tensor/1"

_DTYPES = {"i32": np.dtype("<i4"), "u8": np.dtype("u1")}


class ManifestError(ValueError):
    """Manifest is not well-formed."""


class MissingBlobError(ManifestError, FileNotFoundError):
    pass


class TruncatedBlobError(ManifestError):
    pass


class ChecksumError(ManifestError):
    pass


def crc32(data: bytes) -> int:
    return zlib.crc32(data) & 0xFFFFFFFF


def _read_yaml(path: Path) -> dict:
    try:
        doc = yaml.safe_load(path.read_text())
    except FileNotFoundError:
        raise
    except yaml.YAMLError as exc:
        raise ManifestError(f"{path}: not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ManifestError(f"{path}: top level must be a mapping")
    return doc


def _require(entry: dict, key: str, where: str):
    if key not in entry:
        raise ManifestError(f"{where}: missing key {key!r}")
    return entry[key]


def _read_blob(base: Path, entry: dict, shape, dtype: np.dtype, where: str) -> np.ndarray:
    blob = base / str(_require(entry, "blob", where))
    offset = int(entry.get("offset", 0))
    expected = int(_require(entry, "crc32", where))
    count = int(np.prod(shape))
    nbytes = count * dtype.itemsize
    if not blob.is_file():
        raise MissingBlobError(f"{where}: blob {blob} not found")
    with open(blob, "rb") as fh:
        fh.seek(offset)
        data = fh.read(nbytes)
    if len(data) < nbytes:
        raise TruncatedBlobError(f"{where}: blob {blob} has {len(data)} bytes at offset {offset}, need {nbytes}")
    if crc32(data) != expected:
        raise ChecksumError(f"{where}: CRC-32 mismatch for {blob} (stored {expected:#010x}, got {crc32(data):#010x})")
    return np.frombuffer(data, dtype=dtype).reshape(shape)


def _layer_from_entry(base: Path, entry, i: int) -> LayerSpec:
    where = f"layer {i}"
    if not isinstance(entry, dict):
        raise ManifestError(f"{where}: entry must be a mapping")
    try:
        kind = _require(entry, "kind", where)
        in_shape = tuple(int(v) for v in _require(entry, "in_shape", where))
        out_shape = tuple(int(v) for v in _require(entry, "out_shape", where))
        if kind == "fc":
            ky, kx = 1, 1
            w_shape = (out_shape[0], int(np.prod(in_shape)), 1, 1)
        else:
            ky, kx = (int(v) for v in _require(entry, "kernel", where))
            w_shape = (out_shape[0], in_shape[0], ky, kx)
    except (TypeError, ValueError, IndexError) as exc:
        if isinstance(exc, ManifestError):
            raise
        raise ManifestError(f"{where}: bad shape fields: {exc}") from exc
    weights = _read_blob(base, entry, w_shape, _DTYPES["i32"], where)
    try:
        return LayerSpec(
            kind=kind,
            in_shape=in_shape,
            out_shape=out_shape,
            weights=weights.astype(np.int32),
            stride=int(entry.get("stride", 1)),
            padding=int(entry.get("padding", 0)),
            theta=int(entry.get("theta", 1)),
            theta_dt=None if entry.get("theta_dt") is None else int(entry["theta_dt"]),
            dt_delay=None if entry.get("dt_delay") is None else int(entry["dt_delay"]),
            sgs_tau=float(entry.get("sgs_tau", 0.0)),
            name=str(entry.get("name", "")),
        )
    except ValueError as exc:
        raise ManifestError(f"{where}: {exc}") from exc


def load_network(path) -> NetworkSpec:
    path = Path(path)
    doc = _read_yaml(path)
    if doc.get("format", NETWORK_FORMAT) != NETWORK_FORMAT:
        raise ManifestError(f"{path}: unsupported format {doc.get('format')!r}")
    layers = doc.get("layers")
    if not isinstance(layers, list) or not layers:
        raise ManifestError(f"{path}: manifest declares no layers")
    try:
        encoding = EncodingParams(int(doc.get("encoding", {}).get("bits", 4)))
        arch_doc = doc.get("arch") or {}
        known = {f.name for f in fields(ArchConfig)}
        unknown = set(arch_doc) - known
        if unknown:
            raise ManifestError(f"{path}: unknown arch keys {sorted(unknown)}")
        arch = ArchConfig(**arch_doc)
    except (TypeError, ValueError, AttributeError) as exc:
        if isinstance(exc, ManifestError):
            raise
        raise ManifestError(f"{path}: {exc}") from exc
    specs = [_layer_from_entry(path.parent, entry, i) for i, entry in enumerate(layers)]
    try:
        return NetworkSpec(specs, encoding, arch, seed=doc.get("seed"))
    except ValueError as exc:
        raise ManifestError(f"{path}: {exc}") from exc


def save_network(net: NetworkSpec, path, blob_name: str | None = None) -> None:
    """Write the manifest plus one concatenated weight blob next to it."""
    path = Path(path)
    blob_name = blob_name or path.stem + ".weights.bin"
    entries, chunks, offset = [], [], 0
    for layer in net.layers:
        data = np.ascontiguousarray(layer.weights, dtype="<i4").tobytes()
        entry = {
            "kind": layer.kind,
            "in_shape": list(layer.in_shape),
            "out_shape": list(layer.out_shape),
        }
        if layer.kind == "conv2d":
            entry["kernel"] = list(layer.kernel)
        entry.update(
            stride=layer.stride,
            padding=layer.padding,
            theta=layer.theta,
            theta_dt=layer.theta_dt,
            dt_delay=layer.dt_delay,
            sgs_tau=float(layer.sgs_tau),
            blob=blob_name,
            offset=offset,
            crc32=crc32(data),
        )
        if layer.name:
            entry["name"] = layer.name
        entries.append(entry)
        chunks.append(data)
        offset += len(data)
    doc = {
        "format": NETWORK_FORMAT,
        "encoding": {"bits": net.encoding.m},
        "arch": asdict(net.arch),
        "seed": net.seed,
        "layers": entries,
    }
    (path.parent / blob_name).write_bytes(b"".join(chunks))
    path.write_text(yaml.safe_dump(doc, sort_keys=False))


def save_tensor(x, path, blob_name: str | None = None) -> None:
    path = Path(path)
    x = np.asarray(x)
    if x.size and (x.min() < 0 or x.max() > 255):
        raise ValueError("tensor values must fit in unsigned 8 bits")
    data = np.ascontiguousarray(x, dtype="u1").tobytes()
    blob_name = blob_name or path.stem + ".bin"
    (path.parent / blob_name).write_bytes(data)
    doc = {"format": TENSOR_FORMAT, "dtype": "u8", "shape": list(x.shape), "blob": blob_name,
           "offset": 0, "crc32": crc32(data)}
    path.write_text(yaml.safe_dump(doc, sort_keys=False))


def load_tensor(path) -> np.ndarray:
    path = Path(path)
    doc = _read_yaml(path)
    if doc.get("format", TENSOR_FORMAT) != TENSOR_FORMAT or doc.get("dtype", "u8") != "u8":
        raise ManifestError(f"{path}: not an unsigned 8-bit tensor container")
    try:
        shape = tuple(int(v) for v in _require(doc, "shape", str(path)))
    except (TypeError, ValueError) as exc:
        raise ManifestError(f"{path}: bad shape: {exc}") from exc
    return _read_blob(path.parent, doc, shape, _DTYPES["u8"], str(path)).copy()
