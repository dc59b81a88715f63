"""Autoregressive n-gram sequence model with interpolated add-k smoothing.

The model scores whole sequences as a product of per-position conditionals
plus an explicit end-of-sequence event, so probabilities over sequences of
every length sum to one and candidates of different lengths are directly
comparable. Contexts shorter than order-1 are padded with a begin marker
that is never scored as an event.

Each conditional is a weighted mixture over orders 1..n of add-k
estimates, every one of them smoothed across the full event space
(vocabulary plus end-of-sequence), so all conditionals are strictly
positive and each distribution sums to one.

Anything with ``logprob``/``next_dist``/``generate`` and a ``vocab_size``
can stand in for this class downstream; nothing else in the package
depends on the count-based internals.

Model file: magic ``ABPENGRM``, u32 LE version (=1), u64 LE vocab_size,
u32 LE order, f64 LE add_k, order f64 LE interpolation weights, u64 LE
triple count, then sorted (context, event, count) triples as u64s. Context
symbols are stored shifted by one with 0 for the begin marker; the event
id ``vocab_size`` is the end-of-sequence event. Only top-order counts are
stored; lower orders are exact marginals and are rebuilt on load.
"""

from __future__ import annotations

import math
import struct

import numpy as np

from .corpus import Corpus, TokenSequence
from .errors import FormatError

NGRAM_MAGIC = b"ABPENGRM"
NGRAM_VERSION = 1
BOS = -1

_FIXED_HEADER = struct.Struct("<8sIQId")


class NgramModel:
    """Count-based sequence model; immutable once constructed."""

    def __init__(
        self,
        vocab_size: int,
        order: int,
        add_k: float,
        weights: tuple[float, ...],
        ngram_counts: list[dict[tuple[int, ...], int]],
        context_counts: list[dict[tuple[int, ...], int]],
    ):
        if vocab_size < 1:
            raise ValueError("vocab_size must be >= 1")
        if order < 1:
            raise ValueError("order must be >= 1")
        if not add_k > 0:
            raise ValueError("add_k must be > 0")
        if len(weights) != order:
            raise ValueError("need one interpolation weight per order")
        self.vocab_size = vocab_size
        self.order = order
        self.add_k = float(add_k)
        self.weights = tuple(float(w) for w in weights)
        self._ngram_counts = ngram_counts
        self._context_counts = context_counts

    @property
    def eos_id(self) -> int:
        return self.vocab_size

    @staticmethod
    def _normalize_weights(order: int, weights) -> tuple[float, ...]:
        if weights is None:
            return (1.0 / order,) * order
        ws = [float(w) for w in weights]
        if len(ws) != order:
            raise ValueError(f"expected {order} interpolation weights, got {len(ws)}")
        if any(w < 0 for w in ws) or sum(ws) <= 0:
            raise ValueError("interpolation weights must be non-negative with positive sum")
        total = sum(ws)
        return tuple(w / total for w in ws)

    @classmethod
    def train(
        cls,
        corpus: Corpus,
        order: int = 4,
        add_k: float = 0.1,
        interpolation_weights=None,
    ) -> "NgramModel":
        """Collect n-gram counts (begin-padded, one end event per utterance)."""
        if not corpus.utterances:
            raise ValueError("cannot train on an empty corpus")
        if order < 1:
            raise ValueError("order must be >= 1")
        if not add_k > 0:
            raise ValueError("add_k must be > 0")
        weights = cls._normalize_weights(order, interpolation_weights)
        eos = corpus.vocab_size
        ngram_counts: list[dict[tuple[int, ...], int]] = [{} for _ in range(order)]
        context_counts: list[dict[tuple[int, ...], int]] = [{} for _ in range(order)]
        pad = [BOS] * (order - 1)
        for utt in corpus.utterances:
            symbols = pad + list(utt)
            events = list(utt) + [eos]
            for j, e in enumerate(events):
                full = tuple(symbols[j : j + order - 1])
                for o in range(1, order + 1):
                    sub = full[order - o :]
                    grams = ngram_counts[o - 1]
                    ctxs = context_counts[o - 1]
                    key = sub + (e,)
                    grams[key] = grams.get(key, 0) + 1
                    ctxs[sub] = ctxs.get(sub, 0) + 1
        return cls(corpus.vocab_size, order, add_k, weights, ngram_counts, context_counts)

    def _check_ids(self, seq) -> None:
        for i, t in enumerate(seq):
            if not 0 <= t < self.vocab_size:
                raise ValueError(f"id {t} at position {i} out of vocabulary")

    def _cond_prob(self, ctx: tuple[int, ...], event: int) -> float:
        smooth_mass = self.add_k * (self.vocab_size + 1)
        p = 0.0
        for o in range(1, self.order + 1):
            sub = ctx[self.order - o :]
            num = self._ngram_counts[o - 1].get(sub + (event,), 0) + self.add_k
            den = self._context_counts[o - 1].get(sub, 0) + smooth_mass
            p += self.weights[o - 1] * (num / den)
        return p

    def _pad_context(self, context) -> tuple[int, ...]:
        ctx = ((BOS,) * (self.order - 1) + tuple(context))
        return ctx[len(ctx) - (self.order - 1) :] if self.order > 1 else ()

    def logprob(self, seq: TokenSequence) -> float:
        """Natural-log probability of ``seq`` including its end event."""
        self._check_ids(seq)
        ctx = (BOS,) * (self.order - 1)
        total = 0.0
        for x in seq:
            total += math.log(self._cond_prob(ctx, x))
            if self.order > 1:
                ctx = ctx[1:] + (x,)
        return total + math.log(self._cond_prob(ctx, self.eos_id))

    def next_dist(self, context: TokenSequence) -> np.ndarray:
        """Distribution over vocab + end event given the last order-1 tokens."""
        self._check_ids(context)
        ctx = self._pad_context(context)
        probs = np.empty(self.vocab_size + 1, dtype=np.float64)
        for e in range(self.vocab_size + 1):
            probs[e] = self._cond_prob(ctx, e)
        return probs

    def generate(
        self,
        prompt: TokenSequence,
        max_new: int,
        *,
        seed: int,
        temperature: float = 1.0,
        top_k: int | None = None,
    ) -> TokenSequence:
        """Extend ``prompt`` by sampling until the end event or ``max_new``.

        ``temperature`` scales log-probabilities before renormalization;
        0 selects greedy decoding (iterated argmax, lowest id on ties).
        ``top_k`` keeps the k most probable events before renormalizing.
        """
        self._check_ids(prompt)
        if max_new < 0:
            raise ValueError("max_new must be >= 0")
        if temperature < 0:
            raise ValueError("temperature must be >= 0")
        if top_k is not None and top_k < 1:
            raise ValueError("top_k must be >= 1")
        out = list(prompt)
        rng = np.random.default_rng(seed)
        for _ in range(max_new):
            probs = self.next_dist(out)
            event = self._sample_event(probs, rng, temperature, top_k)
            if event == self.eos_id:
                break
            out.append(event)
        return out

    @staticmethod
    def _sample_event(
        probs: np.ndarray,
        rng: np.random.Generator,
        temperature: float,
        top_k: int | None,
    ) -> int:
        if temperature == 0.0:
            return int(np.argmax(probs))
        logits = np.log(probs) / temperature
        if top_k is not None and top_k < logits.size:
            keep = np.argsort(-logits, kind="stable")[:top_k]
            mask = np.full(logits.size, -np.inf)
            mask[keep] = logits[keep]
            logits = mask
        logits -= logits.max()
        weights = np.exp(logits)
        cum = np.cumsum(weights / weights.sum())
        idx = int(np.searchsorted(cum, rng.random(), side="right"))
        live = np.flatnonzero(weights > 0)
        return int(min(idx, live[-1]))

    def to_bytes(self) -> bytes:
        top_grams = self._ngram_counts[self.order - 1]
        triples = sorted(
            (tuple(s + 1 for s in key[:-1]), key[-1], cnt)
            for key, cnt in top_grams.items()
        )
        parts = [
            _FIXED_HEADER.pack(
                NGRAM_MAGIC, NGRAM_VERSION, self.vocab_size, self.order, self.add_k
            ),
            struct.pack(f"<{self.order}d", *self.weights),
            struct.pack("<Q", len(triples)),
        ]
        row = struct.Struct(f"<{self.order + 1}Q")
        for ctx, event, cnt in triples:
            parts.append(row.pack(*ctx, event, cnt))
        return b"".join(parts)

    def save(self, path: str) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path: str) -> "NgramModel":
        with open(path, "rb") as fh:
            blob = fh.read()
        if len(blob) < _FIXED_HEADER.size:
            raise FormatError(f"{path}: truncated model header")
        magic, version, vocab_size, order, add_k = _FIXED_HEADER.unpack_from(blob)
        if magic != NGRAM_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        if version != NGRAM_VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        if vocab_size < 1 or order < 1 or not add_k > 0:
            raise FormatError(f"{path}: invalid model parameters")
        offset = _FIXED_HEADER.size
        try:
            weights = struct.unpack_from(f"<{order}d", blob, offset)
            offset += 8 * order
            (n_triples,) = struct.unpack_from("<Q", blob, offset)
            offset += 8
        except struct.error:
            raise FormatError(f"{path}: truncated header fields") from None
        if any(not math.isfinite(w) or w < 0 for w in weights) or sum(weights) <= 0:
            raise FormatError(f"{path}: invalid interpolation weights")
        row = struct.Struct(f"<{order + 1}Q")
        if len(blob) != offset + n_triples * row.size:
            raise FormatError(f"{path}: payload size mismatch")

        ngram_counts: list[dict[tuple[int, ...], int]] = [{} for _ in range(order)]
        context_counts: list[dict[tuple[int, ...], int]] = [{} for _ in range(order)]
        for _ in range(n_triples):
            values = row.unpack_from(blob, offset)
            offset += row.size
            raw_ctx, event, cnt = values[: order - 1], values[order - 1], values[order]
            if cnt < 1:
                raise FormatError(f"{path}: non-positive count")
            if event > vocab_size:
                raise FormatError(f"{path}: event id {event} out of range")
            full = tuple(int(s) - 1 for s in raw_ctx)
            seen_real = False
            for s in full:
                if s >= vocab_size:
                    raise FormatError(f"{path}: context id {s} out of range")
                if s != BOS:
                    seen_real = True
                elif seen_real:
                    raise FormatError(f"{path}: begin marker after a real token")
            for o in range(1, order + 1):
                sub = full[order - o :]
                grams = ngram_counts[o - 1]
                ctxs = context_counts[o - 1]
                key = sub + (int(event),)
                grams[key] = grams.get(key, 0) + int(cnt)
                ctxs[sub] = ctxs.get(sub, 0) + int(cnt)
        return cls(
            int(vocab_size), int(order), float(add_k), tuple(weights),
            ngram_counts, context_counts,
        )
