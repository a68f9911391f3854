"""Byte-pair-encoding vocabulary for chemical text.

No pre-tokenization: SMILES has no word boundaries, so the base symbols
are single characters. Non-ASCII input falls back to bytes, with bytes
0x80-0xFF represented as the characters U+0100-U+017F (every non-ASCII
character goes through this byte mapping, so the range is unambiguous and
round-trips are exact for arbitrary UTF-8).

All 118 element symbols are forced into the vocabulary; the two-letter
ones are realized as a pre-merge pass that runs before the learned merges,
so e.g. "Cl" always encodes as one token. Learned merges are greedy
highest-frequency pairs, ties broken by lexicographic pair order.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from retrobench.elements import all_symbols

_BYTE_BASE = 0x100


def _atomize(text: str) -> list[str]:
    tokens: list[str] = []
    for ch in text:
        code = ord(ch)
        if code < 128:
            tokens.append(ch)
        else:
            for byte in ch.encode("utf-8"):
                tokens.append(chr(_BYTE_BASE + byte - 0x80))
    return tokens


def _tokens_to_text(tokens: Iterable[str]) -> str:
    data = bytearray()
    for token in tokens:
        for ch in token:
            code = ord(ch)
            if code < 128:
                data.append(code)
            else:
                data.append(0x80 + code - _BYTE_BASE)
    return data.decode("utf-8", errors="replace")


@dataclass(frozen=True)
class MergeTable:
    forced_tokens: tuple[str, ...]
    merges: tuple[tuple[str, str], ...]
    vocab: frozenset[str]

    def __post_init__(self):
        missing = set(all_symbols()) - set(self.forced_tokens)
        if missing:
            raise ValueError(f"forced tokens must cover all elements; missing {sorted(missing)}")


def _forced_merge_pass(tokens: list[str], two_letter: frozenset[str]) -> list[str]:
    """Merge adjacent character pairs forming two-letter element symbols.

    Element symbols are Xx-shaped, so candidate pairs can never overlap and
    a single left-to-right scan equals sequential merge application."""
    out: list[str] = []
    i = 0
    n = len(tokens)
    while i < n:
        if i + 1 < n and len(tokens[i]) == 1 and len(tokens[i + 1]) == 1 \
                and tokens[i] + tokens[i + 1] in two_letter:
            out.append(tokens[i] + tokens[i + 1])
            i += 2
        else:
            out.append(tokens[i])
            i += 1
    return out


def _apply_merge(tokens: list[str], left: str, right: str) -> list[str]:
    out: list[str] = []
    i = 0
    n = len(tokens)
    merged = left + right
    while i < n:
        if i + 1 < n and tokens[i] == left and tokens[i + 1] == right:
            out.append(merged)
            i += 2
        else:
            out.append(tokens[i])
            i += 1
    return out


_TWO_LETTER = frozenset(s for s in all_symbols() if len(s) == 2)


def train(corpus: list[str], n_merges: int) -> MergeTable:
    """Greedy highest-frequency pair merging over the corpus."""
    if n_merges < 0:
        raise ValueError("n_merges must be non-negative")
    if not corpus:
        raise ValueError("corpus must be non-empty")

    sequences = [_forced_merge_pass(_atomize(text), _TWO_LETTER) for text in corpus]
    vocab: set[str] = set(all_symbols())
    for seq in sequences:
        vocab.update(seq)

    merges: list[tuple[str, str]] = []
    for _ in range(n_merges):
        counts: Counter[tuple[str, str]] = Counter()
        for seq in sequences:
            counts.update(zip(seq, seq[1:]))
        if not counts:
            break
        best_count = max(counts.values())
        left, right = min(pair for pair, c in counts.items() if c == best_count)
        merges.append((left, right))
        vocab.add(left + right)
        sequences = [_apply_merge(seq, left, right) for seq in sequences]

    return MergeTable(
        forced_tokens=all_symbols(),
        merges=tuple(merges),
        vocab=frozenset(vocab),
    )


def encode(text: str, table: MergeTable) -> list[str]:
    """Forced element pass first, then merges in table order."""
    tokens = _forced_merge_pass(_atomize(text), _TWO_LETTER)
    for left, right in table.merges:
        if len(tokens) < 2:
            break
        tokens = _apply_merge(tokens, left, right)
    return tokens


def decode(tokens: Iterable[str], table: MergeTable) -> str:
    return _tokens_to_text(tokens)


def merge_vocab(base: set[str], chem: MergeTable) -> tuple[set[str], dict]:
    """Set union with a delta report (the target size of any particular base
    model is not reproducible here, so deltas are what we can state)."""
    merged = set(base) | set(chem.vocab)
    report = {
        "base_size": len(base),
        "chem_size": len(chem.vocab),
        "merged_size": len(merged),
        "added_tokens": len(merged) - len(base),
    }
    return merged, report


# -- merge-table file format ---------------------------------------------------

_HEADER = "retrobench-bpe v1"


def write_merge_table(table: MergeTable, path: Path | str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_HEADER + "\n")
        fh.write("#forced\n")
        for token in table.forced_tokens:
            fh.write(token + "\n")
        fh.write("#merges\n")
        for left, right in table.merges:
            fh.write(f"{left}\t{right}\n")


def read_merge_table(path: Path | str) -> MergeTable:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != _HEADER:
        raise ValueError(f"not a merge-table file (expected {_HEADER!r} header)")
    if lines[1] != "#forced":
        raise ValueError("missing #forced block")
    forced: list[str] = []
    i = 2
    while i < len(lines) and lines[i] != "#merges":
        forced.append(lines[i])
        i += 1
    if i >= len(lines):
        raise ValueError("missing #merges block")
    merges: list[tuple[str, str]] = []
    for line in lines[i + 1:]:
        if not line:
            continue
        left, sep, right = line.partition("\t")
        if not sep:
            raise ValueError(f"malformed merge line {line!r}")
        merges.append((left, right))
    vocab: set[str] = set(forced)
    for left, right in merges:
        vocab.update((left, right, left + right))
    # single characters of merge parts are base symbols too
    for left, right in merges:
        vocab.update(left)
        vocab.update(right)
    return MergeTable(tuple(forced), tuple(merges), frozenset(vocab))
