"""Bijection between token ids and a contiguous CJK codepoint block.

The block U+4E00..U+9FFF holds exactly 20992 codepoints; id ``i`` maps to
``chr(0x4E00 + i)``. Token streams thereby become ordinary text that any
line-based text tool can carry. Only base-alphabet ids fit in the block;
merged units stay integers.
"""

from __future__ import annotations

REGION_BASE = 0x4E00
REGION_LAST = 0x9FFF
REGION_SIZE = REGION_LAST - REGION_BASE + 1  # 20992


def tokens_to_unicode(seq: list[int]) -> str:
    chars = []
    for i, t in enumerate(seq):
        if not 0 <= t < REGION_SIZE:
            raise ValueError(
                f"id {t} at position {i} exceeds codec capacity {REGION_SIZE}"
            )
        chars.append(chr(REGION_BASE + t))
    return "".join(chars)


def unicode_to_tokens(text: str) -> list[int]:
    ids = []
    for i, ch in enumerate(text):
        cp = ord(ch)
        if not REGION_BASE <= cp <= REGION_LAST:
            raise ValueError(
                f"character {ch!r} at index {i} is outside U+4E00..U+9FFF"
            )
        ids.append(cp - REGION_BASE)
    return ids
