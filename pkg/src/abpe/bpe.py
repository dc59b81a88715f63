"""Byte-pair encoding over integer unit sequences.

Training starts from a closed base alphabet and repeatedly merges the most
frequent adjacent unit pair into a fresh unit, one merge per round, until
the requested vocabulary size is reached or no pair occurs at least twice.
Occurrences are counted non-overlapping left-to-right (a run of m equal
units contributes floor(m/2) pairs) and never across utterance boundaries.
Frequency ties go to the lexicographically smallest (left, right) pair.

Encoding replays the merges by rank priority, which reproduces the
training-time segmentation; decoding expands merged units recursively, so
decode(encode(x)) == x for every base-alphabet sequence.

Merges file: line 1 ``#abpe 1``, line 2 ``#base <N>``, then one merge per
line as ``left right`` unit ids in training order. Merge i defines unit
id N+i.
"""

from __future__ import annotations

from .corpus import Corpus, TokenSequence
from .errors import FormatError

MERGES_VERSION = 1
MAX_BASE_SIZE = 20992  # the Unicode interchange block is this wide

Pair = tuple[int, int]


def _count_pairs(seq: list[int], counts: dict[Pair, int]) -> None:
    """Accumulate non-overlapping left-to-right adjacent-pair counts."""
    n = len(seq)
    i = 0
    while i < n - 1:
        a = seq[i]
        if a == seq[i + 1]:
            j = i + 1
            while j < n and seq[j] == a:
                j += 1
            counts[(a, a)] = counts.get((a, a), 0) + (j - i) // 2
            i = j - 1  # run tail may still pair with the next distinct unit
        else:
            pair = (a, seq[i + 1])
            counts[pair] = counts.get(pair, 0) + 1
            i += 1


def _merge_pair(seq: list[int], pair: Pair, new_id: int) -> list[int]:
    """Replace left-to-right non-overlapping occurrences of ``pair``."""
    a, b = pair
    out: list[int] = []
    i = 0
    n = len(seq)
    while i < n:
        if i < n - 1 and seq[i] == a and seq[i + 1] == b:
            out.append(new_id)
            i += 2
        else:
            out.append(seq[i])
            i += 1
    return out


class BpeModel:
    """An ordered merge list over a closed base alphabet.

    Unit ids below ``base_size`` are base units; merge i defines unit
    ``base_size + i`` from two earlier units. The model is immutable after
    construction.
    """

    def __init__(self, base_size: int, merges: list[Pair]):
        if not 1 <= base_size <= MAX_BASE_SIZE:
            raise ValueError(f"base_size must be in [1, {MAX_BASE_SIZE}]")
        seen: set[Pair] = set()
        unit_len = [1] * base_size
        for i, (a, b) in enumerate(merges):
            limit = base_size + i
            if not (0 <= a < limit and 0 <= b < limit):
                raise ValueError(f"merge {i}: operand out of range for unit {limit}")
            if (a, b) in seen:
                raise ValueError(f"merge {i}: duplicate pair ({a}, {b})")
            seen.add((a, b))
            unit_len.append(unit_len[a] + unit_len[b])
        self.base_size = base_size
        self.merges: list[Pair] = [(int(a), int(b)) for a, b in merges]
        self._unit_len = unit_len

    @property
    def vocab_size(self) -> int:
        return self.base_size + len(self.merges)

    def unit_len(self, unit_id: int) -> int:
        """Number of base tokens the unit expands to."""
        if not 0 <= unit_id < self.vocab_size:
            raise ValueError(f"unit id {unit_id} out of range")
        return self._unit_len[unit_id]

    def __eq__(self, other) -> bool:
        if not isinstance(other, BpeModel):
            return NotImplemented
        return self.base_size == other.base_size and self.merges == other.merges

    def __repr__(self) -> str:
        return f"BpeModel(base_size={self.base_size}, merges={len(self.merges)})"

    @classmethod
    def train(cls, corpus: Corpus, vocab_size: int) -> "BpeModel":
        """Learn merges until ``vocab_size`` units exist or pairs run out."""
        if not corpus.utterances:
            raise ValueError("cannot train on an empty corpus")
        base = corpus.vocab_size
        if vocab_size < base:
            raise ValueError(
                f"vocab_size {vocab_size} is below the base alphabet size {base}"
            )
        seqs = [list(u) for u in corpus.utterances]
        merges: list[Pair] = []
        for rank in range(vocab_size - base):
            counts: dict[Pair, int] = {}
            for s in seqs:
                _count_pairs(s, counts)
            best_pair: Pair | None = None
            best_count = 0
            for pair, cnt in counts.items():
                if cnt > best_count or (cnt == best_count and pair < best_pair):
                    best_pair, best_count = pair, cnt
            if best_pair is None or best_count < 2:
                break
            new_id = base + rank
            a = best_pair[0]
            seqs = [
                _merge_pair(s, best_pair, new_id) if a in s else s for s in seqs
            ]
            merges.append(best_pair)
        return cls(base, merges)

    def encode(self, seq: TokenSequence) -> TokenSequence:
        """Apply merges in rank order; input must be base-alphabet ids."""
        for i, t in enumerate(seq):
            if not 0 <= t < self.base_size:
                raise ValueError(
                    f"id {t} at position {i} is outside the base alphabet"
                )
        out = list(seq)
        for rank, pair in enumerate(self.merges):
            if len(out) < 2:
                break
            if pair[0] in out:
                out = _merge_pair(out, pair, self.base_size + rank)
        return out

    def decode(self, seq: TokenSequence) -> TokenSequence:
        """Expand merged units back to base tokens."""
        vocab = self.vocab_size
        out: list[int] = []
        for i, t in enumerate(seq):
            if not 0 <= t < vocab:
                raise ValueError(f"id {t} at position {i} out of range")
            if t < self.base_size:
                out.append(t)
                continue
            stack = [t]
            while stack:
                u = stack.pop()
                if u < self.base_size:
                    out.append(u)
                else:
                    a, b = self.merges[u - self.base_size]
                    stack.append(b)
                    stack.append(a)
        return out

    def encode_corpus(self, corpus: Corpus) -> Corpus:
        return Corpus([self.encode(u) for u in corpus.utterances], self.vocab_size)

    def decode_corpus(self, corpus: Corpus) -> Corpus:
        return Corpus([self.decode(u) for u in corpus.utterances], self.base_size)

    def dumps(self) -> str:
        lines = [f"#abpe {MERGES_VERSION}", f"#base {self.base_size}"]
        lines.extend(f"{a} {b}" for a, b in self.merges)
        return "\n".join(lines) + "\n"

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path: str) -> "BpeModel":
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().split("\n")
        if len(lines) < 2 or not lines[0].startswith("#abpe"):
            raise FormatError(f"{path}: missing '#abpe' header")
        parts = lines[0].split()
        if len(parts) != 2 or parts[1] != str(MERGES_VERSION):
            raise FormatError(f"{path}: unsupported merges version {lines[0]!r}")
        base_parts = lines[1].split()
        if len(base_parts) != 2 or base_parts[0] != "#base":
            raise FormatError(f"{path}: missing '#base <N>' line")
        try:
            base = int(base_parts[1])
        except ValueError:
            raise FormatError(f"{path}: malformed base size {base_parts[1]!r}") from None
        merges: list[Pair] = []
        for lineno, raw in enumerate(lines[2:], start=3):
            line = raw.strip()
            if not line:
                continue
            cells = line.split()
            if len(cells) != 2:
                raise FormatError(f"{path}:{lineno}: expected 'left right'")
            try:
                merges.append((int(cells[0]), int(cells[1])))
            except ValueError:
                raise FormatError(f"{path}:{lineno}: malformed unit id") from None
        try:
            return cls(base, merges)
        except ValueError as exc:
            raise FormatError(f"{path}: {exc}") from None
