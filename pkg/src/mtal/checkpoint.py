"""Bit-exact model checkpoints.

Layout: 8-byte magic, little-endian uint64 header length, UTF-8 JSON header
(model config, vocabularies, tag sets, parameter manifest), then the raw
little-endian float64 bytes of every parameter in manifest order. The JSON
is dumped with sorted keys and fixed separators and arrays are written in
sorted-name order, so identical models produce identical files — which is
what the determinism guarantees rest on (a zip container would embed
timestamps).
"""

from __future__ import annotations

import json
import os

import numpy as np

from .corpus import TagSet, Vocab
from .tagger import ModelConfig, TaggerModel

MAGIC = b"MTALCKPT"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def _config_dict(cfg: ModelConfig) -> dict:
    return {
        "word_dim": cfg.word_dim, "char_dim": cfg.char_dim,
        "predicate_dim": cfg.predicate_dim, "char_emb_dim": cfg.char_emb_dim,
        "char_window": cfg.char_window, "hidden_units": cfg.hidden_units,
        "encoder_layers": cfg.encoder_layers, "dropout": cfg.dropout,
        "multi_task": cfg.multi_task, "rng_seed": cfg.rng_seed,
    }


def _tag_set_dict(ts: TagSet) -> dict:
    return {"task": ts.task, "labels": list(ts.labels), "codes": list(ts.codes)}


def save_model(model: TaggerModel, path: str) -> None:
    """Write atomically (temp file + rename)."""
    names = sorted(model.params)
    manifest = []
    offset = 0
    blobs = []
    for name in names:
        arr = np.ascontiguousarray(model.params[name], dtype="<f8")
        raw = arr.tobytes()
        manifest.append({"name": name, "shape": list(arr.shape),
                         "dtype": "<f8", "offset": offset})
        blobs.append(raw)
        offset += len(raw)
    header = {
        "format": FORMAT_VERSION,
        "config": _config_dict(model.config),
        "word_vocab": list(model.word_vocab.itos),
        "char_vocab": list(model.char_vocab.itos),
        "srl_tag_set": _tag_set_dict(model.srl_tag_set),
        "er_tag_set": _tag_set_dict(model.er_tag_set),
        "params": manifest,
    }
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(np.uint64(len(head)).tobytes())
        fh.write(head)
        for raw in blobs:
            fh.write(raw)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def load_model(path: str) -> TaggerModel:
    with open(path, "rb") as fh:
        if fh.read(8) != MAGIC:
            raise CheckpointError(f"{path}: not a model checkpoint")
        len_bytes = fh.read(8)
        if len(len_bytes) != 8:
            raise CheckpointError(f"{path}: truncated header")
        (head_len,) = np.frombuffer(len_bytes, dtype="<u8")
        head_raw = fh.read(int(head_len))
        if len(head_raw) != int(head_len):
            raise CheckpointError(f"{path}: truncated header")
        try:
            header = json.loads(head_raw.decode())
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CheckpointError(f"{path}: corrupt header ({exc})") from exc
        if header.get("format") != FORMAT_VERSION:
            raise CheckpointError(f"{path}: unsupported format {header.get('format')}")
        data = fh.read()
    payload_len = max((e["offset"] + 8 * int(np.prod(e["shape"]) or 1)
                       for e in header["params"]), default=0)
    if len(data) < payload_len:
        raise CheckpointError(
            f"{path}: payload holds {len(data)} bytes, manifest needs {payload_len}")

    cfg = ModelConfig(**header["config"])
    srl_ts = TagSet(**{k: tuple(v) if isinstance(v, list) else v
                       for k, v in header["srl_tag_set"].items()})
    er_ts = TagSet(**{k: tuple(v) if isinstance(v, list) else v
                      for k, v in header["er_tag_set"].items()})
    model = TaggerModel(cfg, Vocab(itos=tuple(header["word_vocab"])),
                        Vocab(itos=tuple(header["char_vocab"])), srl_ts, er_ts)
    expected = sorted(model.params)
    got = sorted(e["name"] for e in header["params"])
    if expected != got:
        raise CheckpointError(
            f"{path}: parameter names do not match the declared config")
    for entry in header["params"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        arr = np.frombuffer(data, dtype=entry["dtype"], count=count,
                            offset=start).reshape(shape)
        if arr.shape != model.params[entry["name"]].shape:
            raise CheckpointError(
                f"{path}: shape mismatch for {entry['name']}")
        model.params[entry["name"]] = arr.astype(np.float64)
    return model
