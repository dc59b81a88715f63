"""Token corpora, feature matrices, and a synthetic corpus generator.

On-disk formats handled here:

* Token file: UTF-8 text, one utterance per line, token ids as base-10
  integers separated by single spaces. An optional first line
  ``#vocab <N>`` pins the vocabulary size; without it the size defaults
  to ``1 + max(id)``.
* Feature binary: magic ``ABPEFEAT``, u32 LE version (=1), u64 LE row
  count, u64 LE dim, then row-major little-endian float32 values.
* Feature CSV: comma-separated decimals, one row per line, constant
  column count. ``load_features`` sniffs the magic bytes to pick the
  parser.

Everything in this module is pure: loaders depend only on file bytes and
``synth_corpus`` only on its spec, so repeated calls give identical
results.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError

TokenSequence = list[int]
FeatureMatrix = np.ndarray

TOKEN_HEADER_PREFIX = "#vocab"
FEATURE_MAGIC = b"ABPEFEAT"
FEATURE_VERSION = 1
_FEATURE_HEADER = struct.Struct("<8sIQQ")


@dataclass(frozen=True)
class Corpus:
    """An ordered list of token sequences under a fixed vocabulary size."""

    utterances: list[TokenSequence]
    vocab_size: int

    def __post_init__(self) -> None:
        if self.vocab_size < 1:
            raise ValueError(f"vocab_size must be >= 1, got {self.vocab_size}")
        for i, utt in enumerate(self.utterances):
            for t in utt:
                if not 0 <= t < self.vocab_size:
                    raise ValueError(
                        f"utterance {i}: id {t} outside [0, {self.vocab_size})"
                    )

    def __len__(self) -> int:
        return len(self.utterances)

    def total_tokens(self) -> int:
        return sum(len(u) for u in self.utterances)


def _parse_id(token: str, path: str, lineno: int) -> int:
    body = token[1:] if token.startswith("-") else token
    if not (body.isascii() and body.isdigit()):
        raise FormatError(f"{path}:{lineno}: malformed token {token!r}")
    value = int(token)
    if value < 0:
        raise FormatError(f"{path}:{lineno}: negative id {value}")
    return value


def load_tokens(path: str) -> Corpus:
    """Parse a token file; see the module docstring for the format."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")

    header_vocab: int | None = None
    utterances: list[TokenSequence] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if lineno != 1:
                raise FormatError(f"{path}:{lineno}: header allowed on line 1 only")
            parts = line.split()
            if len(parts) != 2 or parts[0] != TOKEN_HEADER_PREFIX:
                raise FormatError(f"{path}:{lineno}: expected '#vocab <N>' header")
            try:
                header_vocab = int(parts[1])
            except ValueError:
                raise FormatError(
                    f"{path}:{lineno}: malformed vocab size {parts[1]!r}"
                ) from None
            if header_vocab < 1:
                raise FormatError(f"{path}:{lineno}: vocab size must be >= 1")
            continue
        utterances.append([_parse_id(tok, path, lineno) for tok in line.split()])

    if not utterances:
        raise FormatError(f"{path}: no utterances")
    max_id = max(max(u) for u in utterances)
    if header_vocab is not None and header_vocab <= max_id:
        raise FormatError(
            f"{path}: header vocab {header_vocab} does not cover max id {max_id}"
        )
    return Corpus(utterances, max_id + 1 if header_vocab is None else header_vocab)


def dump_tokens(corpus: Corpus) -> str:
    """Serialize a corpus to token-file text (always with a vocab header)."""
    if not corpus.utterances:
        raise ValueError("corpus has no utterances; nothing to serialize")
    pieces = [f"{TOKEN_HEADER_PREFIX} {corpus.vocab_size}\n"]
    for i, utt in enumerate(corpus.utterances):
        if not utt:
            raise ValueError(f"utterance {i} is empty; empty sequences are unserializable")
        pieces.append(" ".join(map(str, utt)))
        pieces.append("\n")
    return "".join(pieces)


def save_tokens(corpus: Corpus, path: str) -> None:
    text = dump_tokens(corpus)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _check_matrix(values: np.ndarray, origin: str) -> np.ndarray:
    if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
        raise FormatError(f"{origin}: feature matrix must be 2-D and non-empty")
    if not np.isfinite(values).all():
        raise FormatError(f"{origin}: non-finite feature value")
    return values


def _parse_feature_binary(blob: bytes, path: str) -> np.ndarray:
    if len(blob) < _FEATURE_HEADER.size:
        raise FormatError(f"{path}: truncated feature header")
    magic, version, n, d = _FEATURE_HEADER.unpack_from(blob)
    if magic != FEATURE_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != FEATURE_VERSION:
        raise FormatError(f"{path}: unsupported feature version {version}")
    if n < 1 or d < 1:
        raise FormatError(f"{path}: invalid shape {n}x{d}")
    expected = _FEATURE_HEADER.size + 4 * n * d
    if len(blob) != expected:
        raise FormatError(
            f"{path}: payload is {len(blob)} bytes, expected {expected}"
        )
    values = np.frombuffer(blob, dtype="<f4", offset=_FEATURE_HEADER.size)
    return _check_matrix(values.reshape(n, d).astype(np.float64), path)


def _parse_feature_csv(text: str, path: str) -> np.ndarray:
    rows: list[list[float]] = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            rows.append([float(cell) for cell in line.split(",")])
        except ValueError:
            raise FormatError(f"{path}:{lineno}: malformed number") from None
        if len(rows[-1]) != len(rows[0]):
            raise FormatError(f"{path}:{lineno}: inconsistent column count")
    if not rows:
        raise FormatError(f"{path}: no feature rows")
    return _check_matrix(np.asarray(rows, dtype=np.float64), path)


def load_features(path: str) -> FeatureMatrix:
    """Load a feature matrix from the binary format or CSV (autodetected)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(FEATURE_MAGIC)] == FEATURE_MAGIC:
        return _parse_feature_binary(blob, path)
    try:
        text = blob.decode("utf-8")
    except UnicodeDecodeError:
        raise FormatError(f"{path}: neither feature binary nor CSV") from None
    return _parse_feature_csv(text, path)


def save_features(values: FeatureMatrix, path: str, fmt: str = "binary") -> None:
    """Write a feature matrix as ``binary`` (float32 payload) or ``csv``."""
    arr = np.asarray(values, dtype=np.float64)
    _check_matrix(arr, path)
    if fmt == "binary":
        n, d = arr.shape
        with open(path, "wb") as fh:
            fh.write(_FEATURE_HEADER.pack(FEATURE_MAGIC, FEATURE_VERSION, n, d))
            fh.write(arr.astype("<f4").tobytes())
    elif fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            for row in arr:
                fh.write(",".join(repr(float(v)) for v in row))
                fh.write("\n")
    else:
        raise ValueError(f"unknown feature format {fmt!r}")


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of the synthetic corpus generator.

    Utterances interleave Zipf-distributed single tokens with whole copies
    of a fixed set of motif subsequences; ``motif_rate`` is the probability
    that each build step appends a motif instead of one token. Motifs are
    appended whole, so an utterance may overshoot its sampled target length
    by up to ``motif_len_range[1] - 1`` tokens.
    """

    vocab_size: int
    n_utts: int
    len_range: tuple[int, int]
    motif_count: int
    motif_len_range: tuple[int, int]
    motif_rate: float
    zipf_exponent: float
    seed: int

    def __post_init__(self) -> None:
        if self.vocab_size < 2:
            raise ValueError("vocab_size must be >= 2")
        if self.n_utts < 1:
            raise ValueError("n_utts must be >= 1")
        lo, hi = self.len_range
        if not 1 <= lo <= hi:
            raise ValueError(f"invalid len_range {self.len_range}")
        mlo, mhi = self.motif_len_range
        if not 1 <= mlo <= mhi:
            raise ValueError(f"invalid motif_len_range {self.motif_len_range}")
        if not 0.0 <= self.motif_rate <= 1.0:
            raise ValueError("motif_rate must be in [0, 1]")
        if self.motif_rate > 0.0 and self.motif_count < 1:
            raise ValueError("motif_rate > 0 requires at least one motif")
        if self.motif_count < 0:
            raise ValueError("motif_count must be >= 0")
        if self.zipf_exponent < 0.0:
            raise ValueError("zipf_exponent must be >= 0")


def synth_corpus(spec: SynthSpec) -> Corpus:
    """Generate a deterministic corpus from ``spec`` (same spec, same bytes)."""
    rng = np.random.default_rng(spec.seed)
    v = spec.vocab_size

    weights = np.arange(1, v + 1, dtype=np.float64) ** -spec.zipf_exponent
    cum = np.cumsum(weights / weights.sum())

    motifs: list[list[int]] = []
    for _ in range(spec.motif_count):
        mlen = int(rng.integers(spec.motif_len_range[0], spec.motif_len_range[1] + 1))
        motifs.append([int(t) for t in rng.integers(0, v, size=mlen)])

    def zipf_token() -> int:
        return min(int(np.searchsorted(cum, rng.random(), side="right")), v - 1)

    utterances: list[TokenSequence] = []
    lo, hi = spec.len_range
    for _ in range(spec.n_utts):
        target = int(rng.integers(lo, hi + 1))
        utt: list[int] = []
        while len(utt) < target:
            if spec.motif_rate > 0.0 and rng.random() < spec.motif_rate:
                utt.extend(motifs[int(rng.integers(0, len(motifs)))])
            else:
                utt.append(zipf_token())
        utterances.append(utt)
    return Corpus(utterances, v)
