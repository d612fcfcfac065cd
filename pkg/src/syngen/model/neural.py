"""Small encoder/encoder/decoder scorer for infilling prediction.

Three stacks: a source encoder, a syntax-context encoder, and a decoder
whose layers apply causal self-attention, source attention, and syntax
context attention in that order, each with residual + layer norm.  Token
embeddings are shared across all stacks and tied to the output projection.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from ..triplet import Triplet, Vocab, vocab_from_triplets
from .base import EncodedSource, ModelError, ScoreModel

_MAX_LEN = 512


@dataclass(frozen=True)
class NeuralConfig:
    width: int = 64
    ff_width: int = 128
    heads: int = 4
    enc_layers: int = 2
    ctx_layers: int = 2
    dec_layers: int = 2
    dropout: float = 0.1
    label_smoothing: float = 0.1
    lr: float = 1e-3
    warmup: int = 100
    lr_decay: float = 0.9995
    steps: int = 2000
    batch_size: int = 64
    holdout_frac: float = 0.05
    eval_every: int = 100
    seed: int = 0

    def validate(self):
        if self.width % self.heads != 0:
            raise ModelError("width must be divisible by head count")
        if self.width % 2 != 0:
            raise ModelError("width must be even (sinusoidal positions)")
        for name in ("width", "ff_width", "heads", "enc_layers", "ctx_layers", "dec_layers"):
            if getattr(self, name) < 1:
                raise ModelError(f"{name} must be >= 1")


def _sinusoid(max_len: int, width: int) -> torch.Tensor:
    pos = torch.arange(max_len, dtype=torch.float64).unsqueeze(1)
    div = torch.exp(
        torch.arange(0, width, 2, dtype=torch.float64) * (-math.log(10000.0) / width)
    )
    pe = torch.zeros(max_len, width, dtype=torch.float64)
    pe[:, 0::2] = torch.sin(pos * div)
    pe[:, 1::2] = torch.cos(pos * div)
    return pe.float()


class MultiHeadAttention(nn.Module):
    def __init__(self, width: int, heads: int):
        super().__init__()
        self.heads = heads
        self.head_dim = width // heads
        self.wq = nn.Linear(width, width)
        self.wk = nn.Linear(width, width)
        self.wv = nn.Linear(width, width)
        self.wo = nn.Linear(width, width)

    def forward(self, q, k, v, mask=None):
        b, tq, w = q.shape
        tk = k.shape[1]

        def split(x, t):
            return x.view(b, t, self.heads, self.head_dim).transpose(1, 2)

        qh = split(self.wq(q), tq)
        kh = split(self.wk(k), tk)
        vh = split(self.wv(v), tk)
        scores = qh @ kh.transpose(-2, -1) / math.sqrt(self.head_dim)
        if mask is not None:
            scores = scores + mask
        attn = torch.softmax(scores, dim=-1)
        out = (attn @ vh).transpose(1, 2).reshape(b, tq, w)
        return self.wo(out)


class FeedForward(nn.Module):
    def __init__(self, width: int, ff_width: int):
        super().__init__()
        self.w1 = nn.Linear(width, ff_width)
        self.w2 = nn.Linear(ff_width, width)

    def forward(self, x):
        return self.w2(F.relu(self.w1(x)))


class EncoderLayer(nn.Module):
    def __init__(self, cfg: NeuralConfig):
        super().__init__()
        self.attn = MultiHeadAttention(cfg.width, cfg.heads)
        self.ff = FeedForward(cfg.width, cfg.ff_width)
        self.ln1 = nn.LayerNorm(cfg.width)
        self.ln2 = nn.LayerNorm(cfg.width)
        self.drop = nn.Dropout(cfg.dropout)

    def forward(self, x, mask):
        x = self.ln1(x + self.drop(self.attn(x, x, x, mask)))
        return self.ln2(x + self.drop(self.ff(x)))


class DecoderLayer(nn.Module):
    def __init__(self, cfg: NeuralConfig):
        super().__init__()
        self.self_attn = MultiHeadAttention(cfg.width, cfg.heads)
        self.src_attn = MultiHeadAttention(cfg.width, cfg.heads)
        self.ctx_attn = MultiHeadAttention(cfg.width, cfg.heads)
        self.ff = FeedForward(cfg.width, cfg.ff_width)
        self.ln1 = nn.LayerNorm(cfg.width)
        self.ln2 = nn.LayerNorm(cfg.width)
        self.ln3 = nn.LayerNorm(cfg.width)
        self.ln4 = nn.LayerNorm(cfg.width)
        self.drop = nn.Dropout(cfg.dropout)

    def forward(self, x, src_mem, ctx_mem, causal_mask, src_mask, ctx_mask):
        x = self.ln1(x + self.drop(self.self_attn(x, x, x, causal_mask)))
        x = self.ln2(x + self.drop(self.src_attn(x, src_mem, src_mem, src_mask)))
        x = self.ln3(x + self.drop(self.ctx_attn(x, ctx_mem, ctx_mem, ctx_mask)))
        return self.ln4(x + self.drop(self.ff(x)))


class InfillNet(nn.Module):
    def __init__(self, vocab_size: int, pad_id: int, cfg: NeuralConfig):
        super().__init__()
        cfg.validate()
        self.cfg = cfg
        self.pad_id = pad_id
        self.emb = nn.Embedding(vocab_size, cfg.width, padding_idx=pad_id)
        self.register_buffer("pe", _sinusoid(_MAX_LEN, cfg.width))
        self.scale = math.sqrt(cfg.width)
        self.drop = nn.Dropout(cfg.dropout)
        self.enc = nn.ModuleList(EncoderLayer(cfg) for _ in range(cfg.enc_layers))
        self.ctx_enc = nn.ModuleList(EncoderLayer(cfg) for _ in range(cfg.ctx_layers))
        self.dec = nn.ModuleList(DecoderLayer(cfg) for _ in range(cfg.dec_layers))

    def _embed(self, ids):
        return self.drop(self.emb(ids) * self.scale + self.pe[: ids.shape[1]])

    def _pad_mask(self, ids):
        # [B, 1, 1, T] additive mask over attention keys
        m = torch.zeros(ids.shape, dtype=self.emb.weight.dtype, device=ids.device)
        m[ids == self.pad_id] = float("-inf")
        return m[:, None, None, :]

    def encode_src(self, src_ids):
        mask = self._pad_mask(src_ids)
        x = self._embed(src_ids)
        for layer in self.enc:
            x = layer(x, mask)
        return x, mask

    def encode_ctx(self, ctx_ids):
        mask = self._pad_mask(ctx_ids)
        x = self._embed(ctx_ids)
        for layer in self.ctx_enc:
            x = layer(x, mask)
        return x, mask

    def decode(self, f_in_ids, src_mem, src_mask, ctx_mem, ctx_mask):
        t = f_in_ids.shape[1]
        causal = torch.full(
            (t, t), float("-inf"), dtype=self.emb.weight.dtype, device=f_in_ids.device
        ).triu(1)
        x = self._embed(f_in_ids)
        for layer in self.dec:
            x = layer(x, src_mem, ctx_mem, causal, src_mask, ctx_mask)
        return x @ self.emb.weight.T

    def forward(self, src_ids, ctx_ids, f_in_ids):
        src_mem, src_mask = self.encode_src(src_ids)
        ctx_mem, ctx_mask = self.encode_ctx(ctx_ids)
        return self.decode(f_in_ids, src_mem, src_mask, ctx_mem, ctx_mask)


class NeuralScoreModel(ScoreModel):
    kind = "neural"

    def __init__(self, vocab: Vocab, config: NeuralConfig, net: InfillNet = None):
        self._vocab = vocab
        self.config = config
        if net is None:
            torch.manual_seed(config.seed)
            net = InfillNet(len(vocab), vocab.pad_id, config)
        self.net = net
        self.net.eval()

    @property
    def vocab(self) -> Vocab:
        return self._vocab

    def _ids(self, toks: Sequence[str]) -> torch.Tensor:
        return torch.tensor([self._vocab.encode(toks)], dtype=torch.long)

    def encode_source(self, source: Sequence[str]) -> EncodedSource:
        with torch.no_grad():
            mem, mask = self.net.encode_src(self._ids(source))
        # the context cache rides along so one decode re-encodes each
        # context at most once
        return EncodedSource(tuple(source), {"mem": mem, "mask": mask, "ctx": {}})

    def _context_memory(self, h_src: EncodedSource, context: tuple):
        cache = h_src.payload["ctx"]
        if context not in cache:
            with torch.no_grad():
                cache[context] = self.net.encode_ctx(self._ids(context))
            if len(cache) > 64:
                cache.pop(next(iter(cache)))
        return cache[context]

    def next_logprobs(
        self, h_src: EncodedSource, context: tuple, prefix: tuple
    ) -> np.ndarray:
        ctx_mem, ctx_mask = self._context_memory(h_src, tuple(context))
        f_in = self._ids((Vocab.BOS,) + tuple(prefix))
        with torch.no_grad():
            logits = self.net.decode(
                f_in, h_src.payload["mem"], h_src.payload["mask"], ctx_mem, ctx_mask
            )
        return (
            torch.log_softmax(logits[0, -1].double(), dim=-1).cpu().numpy()
        )


def init_neural(vocab: Vocab, config: NeuralConfig) -> NeuralScoreModel:
    config.validate()
    return NeuralScoreModel(vocab, config)


# ---------------------------------------------------------------------------
# training


def _batch_tensors(triplets: Sequence[Triplet], vocab: Vocab, device=None):
    srcs = [list(tp.source) for tp in triplets]
    ctxs = [list(tp.context.render()) for tp in triplets]
    fs = [list(tp.infilling.tokens) for tp in triplets]

    def pad(seqs):
        width = max(len(s) for s in seqs)
        out = torch.full((len(seqs), width), vocab.pad_id, dtype=torch.long)
        for i, s in enumerate(seqs):
            out[i, : len(s)] = torch.tensor(vocab.encode(s))
        return out

    f_in = pad([[Vocab.BOS] + f for f in fs])
    f_out = pad([f + [Vocab.EOS] for f in fs])
    return pad(srcs), pad(ctxs), f_in, f_out


def ce_loss(
    net: InfillNet, batch: Sequence[Triplet], vocab: Vocab, label_smoothing: float = 0.0
) -> torch.Tensor:
    """Mean over the batch of the summed per-token cross entropy."""
    if not batch:
        raise ModelError("empty batch")
    src, ctx, f_in, f_out = _batch_tensors(batch, vocab)
    logits = net(src, ctx, f_in)
    loss = F.cross_entropy(
        logits.reshape(-1, logits.shape[-1]),
        f_out.reshape(-1),
        ignore_index=vocab.pad_id,
        label_smoothing=label_smoothing,
        reduction="sum",
    )
    return loss / len(batch)


def train_neural(
    triplets: Sequence[Triplet],
    config: NeuralConfig,
    vocab: Vocab = None,
    log: Optional[Callable[[str], None]] = None,
) -> NeuralScoreModel:
    """Adam with warmup-then-exponential-decay learning rate; the returned
    model carries the parameters with the best held-out loss."""
    if not triplets:
        raise ModelError("no training triplets")
    config.validate()
    vocab = vocab or vocab_from_triplets(triplets)
    rng = random.Random(config.seed)
    torch.manual_seed(config.seed)
    net = InfillNet(len(vocab), vocab.pad_id, config)

    pool = list(triplets)
    rng.shuffle(pool)
    if config.holdout_frac <= 0:
        # no held-out split: monitor loss on the full training pool
        holdout, train = pool, pool
    else:
        n_hold = min(max(int(len(pool) * config.holdout_frac), 1), len(pool) - 1)
        holdout, train = pool[:n_hold], pool[n_hold:]

    opt = torch.optim.Adam(net.parameters(), lr=config.lr)
    best_loss, best_state = math.inf, None

    def lr_at(step):
        if step <= config.warmup:
            return config.lr * step / max(config.warmup, 1)
        return config.lr * config.lr_decay ** (step - config.warmup)

    def heldout_loss():
        net.eval()
        with torch.no_grad():
            val = float(ce_loss(net, holdout, vocab))
        net.train()
        return val

    net.train()
    for step in range(1, config.steps + 1):
        for g in opt.param_groups:
            g["lr"] = lr_at(step)
        batch = [train[rng.randrange(len(train))] for _ in range(config.batch_size)]
        loss = ce_loss(net, batch, vocab, config.label_smoothing)
        if not torch.isfinite(loss):
            raise ModelError(f"training diverged at step {step}")
        opt.zero_grad()
        loss.backward()
        opt.step()
        if step % config.eval_every == 0 or step == config.steps:
            hl = heldout_loss()
            if log:
                log(f"step {step} loss {loss.item():.4f} heldout {hl:.4f}")
            if hl < best_loss:
                best_loss = hl
                best_state = {k: v.clone() for k, v in net.state_dict().items()}
    if best_state is not None:
        net.load_state_dict(best_state)
    net.eval()
    return NeuralScoreModel(vocab, config, net)


# ---------------------------------------------------------------------------
# gradient verification


def grad_check(
    model: NeuralScoreModel,
    triplet: Triplet,
    h: float = 1e-4,
    n_coords: int = 200,
    seed: int = 0,
) -> float:
    """Max relative error between the analytic gradient of the loss and
    central finite differences, on a random parameter subsample, computed
    in double precision with dropout and smoothing off.  The denominator
    carries a small absolute floor so near-zero coordinates are compared
    on the finite-difference noise scale."""
    cfg = replace(model.config, dropout=0.0, label_smoothing=0.0)
    net = InfillNet(len(model.vocab), model.vocab.pad_id, cfg).double()
    net.load_state_dict(
        {k: v.double() for k, v in model.net.state_dict().items()}
    )
    net.eval()
    vocab = model.vocab

    loss = ce_loss(net, [triplet], vocab)
    net.zero_grad()
    loss.backward()

    params = [p for p in net.parameters() if p.requires_grad and p.grad is not None]
    flat_idx = [(pi, i) for pi, p in enumerate(params) for i in range(p.numel())]
    rng = random.Random(seed)
    picks = rng.sample(flat_idx, min(n_coords, len(flat_idx)))

    worst = 0.0
    with torch.no_grad():
        for pi, i in picks:
            p = params[pi]
            orig = p.view(-1)[i].item()
            p.view(-1)[i] = orig + h
            up = float(ce_loss(net, [triplet], vocab))
            p.view(-1)[i] = orig - h
            dn = float(ce_loss(net, [triplet], vocab))
            p.view(-1)[i] = orig
            numeric = (up - dn) / (2 * h)
            analytic = p.grad.view(-1)[i].item()
            err = abs(analytic - numeric) / (abs(analytic) + abs(numeric) + 1e-3)
            worst = max(worst, err)
    return worst
