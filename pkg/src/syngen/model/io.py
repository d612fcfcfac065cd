"""Versioned binary model files.

Layout (little-endian): 8-byte magic, u32 format version, u8 kind tag,
u32 vocab blob length, vocab JSON, u64 payload length, payload.  The
payload is kind-specific JSON (count model) or a torch state blob plus
config JSON (neural model).
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import asdict
from pathlib import Path

import torch

from ..triplet import Vocab
from .base import ModelError, ScoreModel
from .count import CountModel, TrieNode
from .neural import InfillNet, NeuralConfig, NeuralScoreModel

MAGIC = b"SYNGENMD"
VERSION = 1
_KINDS = {"count": 1, "neural": 2}
_KINDS_REV = {v: k for k, v in _KINDS.items()}


def _vocab_blob(vocab: Vocab) -> bytes:
    toks = vocab.tokens
    if toks[: len(Vocab.RESERVED)] != list(Vocab.RESERVED):
        raise ModelError("vocabulary does not start with the reserved tokens")
    return json.dumps(toks[len(Vocab.RESERVED):]).encode()


def _count_payload(model: CountModel) -> bytes:
    obj = {
        "smoothing": model.smoothing,
        "by_key": [
            [list(src), list(ctx), trie.to_obj()]
            for (src, ctx), trie in sorted(model._by_key.items())
        ],
        "by_context": [
            [list(ctx), trie.to_obj()]
            for ctx, trie in sorted(model._by_context.items())
        ],
    }
    return json.dumps(obj).encode()


def _neural_payload(model: NeuralScoreModel) -> bytes:
    buf = io.BytesIO()
    torch.save(model.net.state_dict(), buf)
    cfg = json.dumps(asdict(model.config)).encode()
    return struct.pack("<I", len(cfg)) + cfg + buf.getvalue()


def save_model(model: ScoreModel, path) -> None:
    if model.kind == "count":
        payload = _count_payload(model)
    elif model.kind == "neural":
        payload = _neural_payload(model)
    else:
        raise ModelError(f"unknown model kind {model.kind!r}")
    vb = _vocab_blob(model.vocab)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<IB", VERSION, _KINDS[model.kind]))
        f.write(struct.pack("<I", len(vb)))
        f.write(vb)
        f.write(struct.pack("<Q", len(payload)))
        f.write(payload)


def load_model(path) -> ScoreModel:
    data = Path(path).read_bytes()
    try:
        if data[:8] != MAGIC:
            raise ModelError("bad magic: not a model file")
        version, kind_tag = struct.unpack_from("<IB", data, 8)
        if version != VERSION:
            raise ModelError(f"unsupported format version {version}")
        kind = _KINDS_REV.get(kind_tag)
        if kind is None:
            raise ModelError(f"unknown model kind tag {kind_tag}")
        off = 13
        (vlen,) = struct.unpack_from("<I", data, off)
        off += 4
        if off + vlen > len(data):
            raise ModelError("truncated model file")
        extra = json.loads(data[off : off + vlen])
        off += vlen
        (plen,) = struct.unpack_from("<Q", data, off)
        off += 8
        payload = data[off : off + plen]
        if len(payload) != plen:
            raise ModelError("truncated model file")
    except (struct.error, json.JSONDecodeError) as e:
        raise ModelError("truncated or corrupt model file") from e
    vocab = Vocab(extra)
    if kind == "count":
        obj = json.loads(payload)
        model = CountModel(vocab, obj["smoothing"])
        for src, ctx, trie in obj["by_key"]:
            model._by_key[(tuple(src), tuple(ctx))] = TrieNode.from_obj(trie)
        for ctx, trie in obj["by_context"]:
            model._by_context[tuple(ctx)] = TrieNode.from_obj(trie)
        return model
    (clen,) = struct.unpack_from("<I", payload, 0)
    cfg = NeuralConfig(**json.loads(payload[4 : 4 + clen]))
    net = InfillNet(len(vocab), vocab.pad_id, cfg)
    state = torch.load(io.BytesIO(payload[4 + clen :]), weights_only=True)
    net.load_state_dict(state)
    return NeuralScoreModel(vocab, cfg, net)
