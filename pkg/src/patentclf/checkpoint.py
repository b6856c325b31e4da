"""Checkpoint format: one JSON manifest line, then a raw little-endian
float32 payload.  The manifest lists {name, shape, offset} per parameter
plus the model config, vocabulary and taxonomy, and a CRC of the payload,
so a checkpoint is self-describing and the round trip is bit-exact.
"""

from __future__ import annotations

import json
import zlib

import numpy as np

from .config import ModelConfig
from .corpus import Vocabulary
from .errors import CheckpointError
from .taxonomy import Taxonomy
from .tensor import Tensor

FORMAT_NAME = "patentclf-checkpoint"
FORMAT_VERSION = 1


def save_checkpoint(
    path,
    params: dict[str, Tensor],
    config: ModelConfig,
    vocab: Vocabulary,
    taxonomy: Taxonomy,
):
    payload = bytearray()
    entries = []
    for name, p in params.items():
        raw = np.ascontiguousarray(p.data, dtype="<f4").tobytes()
        entries.append({"name": name, "shape": list(p.data.shape), "offset": len(payload)})
        payload.extend(raw)
    manifest = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "config": config.to_dict(),
        "vocab": vocab.to_dict(),
        "taxonomy": taxonomy.to_dict(),
        "params": entries,
        "payload_bytes": len(payload),
        "crc32": zlib.crc32(bytes(payload)),
    }
    with open(path, "wb") as f:
        f.write(json.dumps(manifest).encode("utf-8"))
        f.write(b"\n")
        f.write(bytes(payload))


def read_checkpoint(path) -> tuple[dict, dict[str, np.ndarray]]:
    """The manifest dict and the named float32 arrays."""
    with open(path, "rb") as f:
        header = f.readline()
        try:
            manifest = json.loads(header.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise CheckpointError(f"{path}: manifest is not valid JSON ({e})") from e
        if manifest.get("format") != FORMAT_NAME:
            raise CheckpointError(f"{path}: not a {FORMAT_NAME} file")
        payload = f.read()
    if len(payload) != manifest["payload_bytes"]:
        raise CheckpointError(
            f"{path}: payload is {len(payload)} bytes, manifest says {manifest['payload_bytes']}"
        )
    if zlib.crc32(payload) != manifest["crc32"]:
        raise CheckpointError(f"{path}: payload checksum mismatch, file is corrupt")
    arrays: dict[str, np.ndarray] = {}
    for entry in manifest["params"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        arr = np.frombuffer(payload, dtype="<f4", count=count, offset=start)
        arrays[entry["name"]] = arr.reshape(shape).astype(np.float32)
    return manifest, arrays


def load_into_params(params: dict[str, Tensor], arrays: dict[str, np.ndarray]):
    """Copy checkpoint arrays into an existing parameter map, names and shapes checked."""
    missing = [name for name in params if name not in arrays]
    if missing:
        raise CheckpointError(f"checkpoint is missing tensors: {missing}")
    extra = [name for name in arrays if name not in params]
    if extra:
        raise CheckpointError(f"checkpoint has unexpected tensors: {extra}")
    for name, p in params.items():
        if tuple(arrays[name].shape) != tuple(p.data.shape):
            raise CheckpointError(
                f"shape mismatch for '{name}': checkpoint {tuple(arrays[name].shape)}, "
                f"model {tuple(p.data.shape)}"
            )
    for name, p in params.items():
        p.data = arrays[name].astype(p.data.dtype)
        p.grad = None


def load_model(path):
    """Rebuild a model from a checkpoint; the embedded config wins."""
    from .model import PatentModel

    manifest, arrays = read_checkpoint(path)
    config = ModelConfig.from_dict(manifest["config"])
    vocab = Vocabulary.from_dict(manifest["vocab"])
    taxonomy = Taxonomy.from_dict(manifest["taxonomy"])
    model = PatentModel(config, taxonomy, vocab)
    load_into_params(model.params, arrays)
    return model
