"""Shared transformer encoder-decoder with one LM head and per-task CLS heads.

The architecture keeps the mechanism of a BART-style model at desk scale:
learned positional embeddings, pre-norm blocks, GELU feed-forward layers,
an LM head weight-tied to the token embedding, and one linear CLS head per
classification task reading the decoder state at the final non-pad position.
No parameters are private to a task except its own CLS head.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, NumericError
from . import tensor as T
from .tensor import Tensor
from .text import BOS_ID, PAD_ID

_MASK_VALUE = -1e9


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    d_model: int = 128
    n_heads: int = 4
    n_enc_layers: int = 2
    n_dec_layers: int = 2
    d_ff: int = 512
    max_len: int = 64
    dropout: float = 0.1
    cls_heads: tuple[tuple[str, int], ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.d_model % self.n_heads != 0:
            raise ConfigError(
                f"d_model={self.d_model} not divisible by n_heads={self.n_heads}"
            )
        if self.vocab_size < 5:
            raise ConfigError("vocab_size must cover the 4 reserved ids")
        if self.max_len < 2:
            raise ConfigError("max_len must be at least 2")
        names = [name for name, _ in self.cls_heads]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate cls head names: {names}")
        for name, n_labels in self.cls_heads:
            if n_labels < 2:
                raise ConfigError(f"cls head '{name}' needs at least 2 labels")

    def to_dict(self) -> dict:
        return {
            "vocab_size": self.vocab_size,
            "d_model": self.d_model,
            "n_heads": self.n_heads,
            "n_enc_layers": self.n_enc_layers,
            "n_dec_layers": self.n_dec_layers,
            "d_ff": self.d_ff,
            "max_len": self.max_len,
            "dropout": self.dropout,
            "cls_heads": [list(h) for h in self.cls_heads],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        d["cls_heads"] = tuple((name, int(n)) for name, n in d.get("cls_heads", []))
        return cls(**d)


def parameter_count(config: ModelConfig) -> int:
    """Closed-form parameter count for a config (LM head is tied, free)."""
    d, f = config.d_model, config.d_ff
    attn = 4 * (d * d + d)
    ln = 2 * d
    ffn = d * f + f + f * d + d
    enc_layer = attn + 2 * ln + ffn
    dec_layer = 2 * attn + 3 * ln + ffn
    total = config.vocab_size * d + config.max_len * d
    total += config.n_enc_layers * enc_layer + ln
    total += config.n_dec_layers * dec_layer + ln
    total += sum(d * n + n for _, n in config.cls_heads)
    return total


def init_parameters(config: ModelConfig, seed: int) -> "ModelBundle":
    """Seeded initialization: normal(0, 0.02) weights, zero biases, unit LN."""
    rng = np.random.default_rng(seed)
    params: dict[str, Tensor] = {}

    def normal(name, *shape):
        params[name] = Tensor(rng.normal(0.0, 0.02, shape), requires_grad=True)

    def zeros(name, *shape):
        params[name] = Tensor(np.zeros(shape), requires_grad=True)

    def ones(name, *shape):
        params[name] = Tensor(np.ones(shape), requires_grad=True)

    def linear(prefix, n_in, n_out):
        normal(f"{prefix}.w", n_in, n_out)
        zeros(f"{prefix}.b", n_out)

    def layer_norm(prefix, dim):
        ones(f"{prefix}.w", dim)
        zeros(f"{prefix}.b", dim)

    def attention(prefix, d):
        for part in ("q", "k", "v", "o"):
            linear(f"{prefix}.{part}", d, d)

    d = config.d_model
    normal("emb.weight", config.vocab_size, d)
    normal("pos.weight", config.max_len, d)
    for i in range(config.n_enc_layers):
        layer_norm(f"enc.{i}.ln1", d)
        attention(f"enc.{i}.attn", d)
        layer_norm(f"enc.{i}.ln2", d)
        linear(f"enc.{i}.ffn.1", d, config.d_ff)
        linear(f"enc.{i}.ffn.2", config.d_ff, d)
    layer_norm("enc.final_ln", d)
    for i in range(config.n_dec_layers):
        layer_norm(f"dec.{i}.ln1", d)
        attention(f"dec.{i}.self_attn", d)
        layer_norm(f"dec.{i}.ln2", d)
        attention(f"dec.{i}.cross_attn", d)
        layer_norm(f"dec.{i}.ln3", d)
        linear(f"dec.{i}.ffn.1", d, config.d_ff)
        linear(f"dec.{i}.ffn.2", config.d_ff, d)
    layer_norm("dec.final_ln", d)
    for name, n_labels in config.cls_heads:
        linear(f"cls.{name}", d, n_labels)
    return ModelBundle(config, params)


class ModelBundle:
    """Parameters plus the forward passes for both task families."""

    def __init__(self, config: ModelConfig, params: dict[str, Tensor]):
        self.config = config
        self.params = params
        self.training = True
        self._rng = np.random.default_rng(0)

    # -- bookkeeping ------------------------------------------------------

    def parameters(self) -> dict[str, Tensor]:
        return self.params

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def train(self) -> None:
        self.training = True

    def eval(self) -> None:
        self.training = False

    def seed_dropout(self, seed) -> None:
        self._rng = np.random.default_rng(seed)

    def cls_task_names(self) -> list[str]:
        return [name for name, _ in self.config.cls_heads]

    # -- building blocks ---------------------------------------------------

    def _p(self, name: str) -> Tensor:
        return self.params[name]

    def _dropout(self, x: Tensor) -> Tensor:
        if not self.training or self.config.dropout <= 0.0:
            return x
        return T.dropout(x, self.config.dropout, self._rng)

    def _linear(self, x: Tensor, prefix: str) -> Tensor:
        return T.matmul(x, self._p(f"{prefix}.w")) + self._p(f"{prefix}.b")

    def _layer_norm(self, x: Tensor, prefix: str) -> Tensor:
        return T.layer_norm(x, self._p(f"{prefix}.w"), self._p(f"{prefix}.b"))

    def _embed(self, ids: np.ndarray) -> Tensor:
        # ids: (B, T) int. Token + learned position, then dropout.
        t = ids.shape[1]
        if t > self.config.max_len:
            raise NumericError(
                f"sequence length {t} exceeds max_len {self.config.max_len}"
            )
        tok = T.getitem(self._p("emb.weight"), ids)
        pos = T.getitem(self._p("pos.weight"), np.arange(t))
        return self._dropout(tok + pos)

    def _attention(self, prefix: str, x: Tensor, kv: Tensor, bias: np.ndarray | None) -> Tensor:
        # x: (B, Tq, D), kv: (B, Tk, D), bias broadcastable to (B, H, Tq, Tk).
        b, tq, d = x.shape
        tk = kv.shape[1]
        h = self.config.n_heads
        dh = d // h

        def split(t_in: Tensor, t_len: int) -> Tensor:
            return T.transpose(T.reshape(t_in, (b, t_len, h, dh)), (0, 2, 1, 3))

        q = split(self._linear(x, f"{prefix}.q"), tq)
        k = split(self._linear(kv, f"{prefix}.k"), tk)
        v = split(self._linear(kv, f"{prefix}.v"), tk)
        scores = T.matmul(q, T.transpose(k, (0, 1, 3, 2))) * (1.0 / math.sqrt(dh))
        if bias is not None:
            scores = scores + Tensor(bias)
        probs = T.softmax(scores, axis=-1)
        ctx = T.matmul(probs, v)
        ctx = T.reshape(T.transpose(ctx, (0, 2, 1, 3)), (b, tq, d))
        return self._linear(ctx, f"{prefix}.o")

    def _ffn(self, x: Tensor, prefix: str) -> Tensor:
        return self._linear(T.gelu(self._linear(x, f"{prefix}.1")), f"{prefix}.2")

    @staticmethod
    def _pad_bias(mask: np.ndarray) -> np.ndarray:
        # (B, S) boolean -> additive (B, 1, 1, S) bias hiding padded keys.
        return np.where(mask, 0.0, _MASK_VALUE)[:, None, None, :]

    @staticmethod
    def _causal_bias(t: int) -> np.ndarray:
        return np.triu(np.full((t, t), _MASK_VALUE), k=1)[None, None, :, :]

    # -- forward passes ----------------------------------------------------

    def encode(self, enc_ids: np.ndarray, enc_mask: np.ndarray) -> Tensor:
        x = self._embed(enc_ids)
        bias = self._pad_bias(enc_mask)
        for i in range(self.config.n_enc_layers):
            h = self._layer_norm(x, f"enc.{i}.ln1")
            x = x + self._dropout(self._attention(f"enc.{i}.attn", h, h, bias))
            x = x + self._dropout(self._ffn(self._layer_norm(x, f"enc.{i}.ln2"), f"enc.{i}.ffn"))
        return self._layer_norm(x, "enc.final_ln")

    def decode(self, enc_out: Tensor, enc_mask: np.ndarray, dec_ids: np.ndarray) -> Tensor:
        x = self._embed(dec_ids)
        causal = self._causal_bias(dec_ids.shape[1])
        cross = self._pad_bias(enc_mask)
        for i in range(self.config.n_dec_layers):
            h = self._layer_norm(x, f"dec.{i}.ln1")
            x = x + self._dropout(self._attention(f"dec.{i}.self_attn", h, h, causal))
            h = self._layer_norm(x, f"dec.{i}.ln2")
            x = x + self._dropout(self._attention(f"dec.{i}.cross_attn", h, enc_out, cross))
            x = x + self._dropout(self._ffn(self._layer_norm(x, f"dec.{i}.ln3"), f"dec.{i}.ffn"))
        return self._layer_norm(x, "dec.final_ln")

    def lm_logits(self, hidden: Tensor) -> Tensor:
        # Weight-tied output projection: (B, T, D) @ (D, V).
        return T.matmul(hidden, T.transpose(self._p("emb.weight"), (1, 0)))

    def forward_generation(
        self, enc_ids: np.ndarray, enc_mask: np.ndarray, dec_ids: np.ndarray
    ) -> Tensor:
        """Next-token logits (B, T, V) for a batch of utterance/response pairs.

        The encoder reads the utterance; the decoder reads the right-shifted
        response under a causal mask, so position t sees only positions <= t.
        """
        if enc_ids.shape != enc_mask.shape or enc_ids.shape[0] != dec_ids.shape[0]:
            raise NumericError(
                f"batch shape mismatch: enc {enc_ids.shape}, mask {enc_mask.shape}, dec {dec_ids.shape}"
            )
        enc_out = self.encode(enc_ids, enc_mask)
        hidden = self.decode(enc_out, enc_mask, dec_ids)
        return self.lm_logits(hidden)

    def forward_classification(
        self, enc_ids: np.ndarray, enc_mask: np.ndarray, task_name: str
    ) -> Tensor:
        """Class logits (B, C) for one task over a batch of utterances.

        The decoder consumes the right-shifted utterance; the task head reads
        the decoder state at the final non-pad position of each row.
        """
        head = f"cls.{task_name}"
        if f"{head}.w" not in self.params:
            raise ConfigError(
                f"unknown classification task '{task_name}'; "
                f"registered heads: {self.cls_task_names()}"
            )
        if enc_ids.shape != enc_mask.shape:
            raise NumericError(
                f"batch shape mismatch: enc {enc_ids.shape}, mask {enc_mask.shape}"
            )
        lengths = enc_mask.sum(axis=1)
        if (lengths < 1).any():
            raise NumericError("classification batch contains an empty row")
        dec_ids = np.full_like(enc_ids, PAD_ID)
        dec_ids[:, 0] = BOS_ID
        dec_ids[:, 1:] = enc_ids[:, :-1]
        keep = np.arange(enc_ids.shape[1])[None, :] < lengths[:, None]
        dec_ids = np.where(keep, dec_ids, PAD_ID)
        enc_out = self.encode(enc_ids, enc_mask)
        hidden = self.decode(enc_out, enc_mask, dec_ids)
        pooled = T.getitem(hidden, (np.arange(enc_ids.shape[0]), lengths - 1))
        return self._linear(pooled, head)

    # -- incremental decoding ----------------------------------------------

    def begin_decode(self, utterance_ids: list[int]) -> dict:
        """Encode one utterance once; reuse the result across beam steps."""
        with T.no_grad():
            enc_ids = np.asarray([utterance_ids], dtype=np.int64)
            enc_mask = np.ones_like(enc_ids, dtype=bool)
            was_training = self.training
            self.eval()
            try:
                enc_out = self.encode(enc_ids, enc_mask)
            finally:
                self.training = was_training
        return {"enc_out": enc_out.data, "enc_mask": enc_mask}

    def next_token_logits(self, ctx: dict, prefixes: list[list[int]]) -> np.ndarray:
        """Logits over the vocabulary for the next token of each prefix.

        All prefixes must share one length (beam hypotheses move in lockstep).
        """
        n = len(prefixes)
        t = len(prefixes[0])
        if any(len(p) != t for p in prefixes):
            raise NumericError("prefixes must share a common length")
        with T.no_grad():
            dec_ids = np.asarray(prefixes, dtype=np.int64)
            enc_out = Tensor(np.repeat(ctx["enc_out"], n, axis=0))
            enc_mask = np.repeat(ctx["enc_mask"], n, axis=0)
            was_training = self.training
            self.eval()
            try:
                hidden = self.decode(enc_out, enc_mask, dec_ids)
                logits = self.lm_logits(T.getitem(hidden, (np.arange(n), np.full(n, t - 1))))
            finally:
                self.training = was_training
        return logits.data


# -- checkpoints -------------------------------------------------------------

_CKPT_MAGIC = b"EMOGEN-CKPT-1\n"


def save_checkpoint(path, bundle: ModelBundle, meta: dict | None = None) -> None:
    """Write a self-describing binary container: JSON header + raw buffers.

    The byte stream is a pure function of config, parameters and meta, so
    identical runs produce identical checkpoint files.
    """
    entries = []
    blobs = []
    offset = 0
    for name, p in bundle.params.items():
        a = np.ascontiguousarray(p.data, dtype="<f8")
        entries.append(
            {"name": name, "shape": list(a.shape), "offset": offset, "nbytes": a.nbytes}
        )
        blobs.append(a.tobytes())
        offset += a.nbytes
    header = {
        "config": bundle.config.to_dict(),
        "meta": meta or {},
        "params": entries,
    }
    payload = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(_CKPT_MAGIC)
        f.write(str(len(payload)).encode("ascii") + b"\n")
        f.write(payload)
        f.write(b"\n")
        for blob in blobs:
            f.write(blob)


def load_checkpoint(path, expected_cls_heads=None) -> tuple[ModelBundle, dict]:
    """Load a checkpoint; optionally insist on a particular CLS head layout."""
    path = Path(path)
    with open(path, "rb") as f:
        magic = f.read(len(_CKPT_MAGIC))
        if magic != _CKPT_MAGIC:
            raise ConfigError(f"{path}: not a checkpoint file")
        length = int(f.readline().strip())
        header = json.loads(f.read(length).decode("utf-8"))
        f.readline()
        body = f.read()
    config = ModelConfig.from_dict(header["config"])
    if expected_cls_heads is not None:
        expected = tuple((str(n), int(c)) for n, c in expected_cls_heads)
        if config.cls_heads != expected:
            raise ConfigError(
                f"{path}: checkpoint cls heads {config.cls_heads} "
                f"do not match expected {expected}"
            )
    params: dict[str, Tensor] = {}
    for entry in header["params"]:
        start, nbytes = entry["offset"], entry["nbytes"]
        arr = np.frombuffer(body[start : start + nbytes], dtype="<f8").reshape(entry["shape"])
        params[entry["name"]] = Tensor(arr.copy(), requires_grad=True)
    bundle = ModelBundle(config, params)
    return bundle, header["meta"]
