"""Semantic chunking by embedding-distance breakpoints.

Documents split into units (sentences for prose, blank-line blocks for
code); each unit's context window (unit plus one neighbor on each side) is
embedded, cosine distances between consecutive windows are compared against
a per-document percentile threshold, and units between breakpoints merge
into chunks. Oversized chunks are hard-split on unit boundaries, mid-unit
only as a last resort.

Unit boundaries are placed only where the mode's canonical separator
literally occurs, so joining units (or chunks) with that separator
reproduces the document byte-for-byte.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .embedder import cosine, count_tokens
from .errors import EmptyDocument

MODE_SENTENCE = "sentence"
MODE_CODE_BLOCK = "code_block"

# A single space following terminal punctuation ends a sentence unit.
_SENTENCE_BOUNDARY = re.compile(r"(?<=[.!?]) ")
_WORD_SPAN = re.compile(r"\S+")

TRUNCATION_MARKER = "... [truncated]"


@dataclass(frozen=True)
class ChunkParams:
    unit_mode: str = MODE_SENTENCE
    breakpoint_percentile: float = 95.0
    max_chunk_tokens: int = 512
    min_units_per_chunk: int = 1

    def __post_init__(self):
        if not 0.0 < self.breakpoint_percentile <= 100.0:
            raise ValueError("breakpoint_percentile must be in (0, 100]")
        if self.max_chunk_tokens < 1:
            raise ValueError("max_chunk_tokens must be >= 1")
        if self.min_units_per_chunk < 1:
            raise ValueError("min_units_per_chunk must be >= 1")
        if self.unit_mode not in (MODE_SENTENCE, MODE_CODE_BLOCK):
            raise ValueError(f"unknown unit_mode {self.unit_mode!r}")


@dataclass(frozen=True)
class Chunk:
    text: str
    parent_doc_id: str
    index: int
    unit_span: tuple[int, int]


def canonical_separator(doc: str, mode: str) -> str:
    """Separator that joins this document's units back to the original text."""
    if mode == MODE_SENTENCE:
        return " "
    if mode == MODE_CODE_BLOCK:
        return "\n\n" if "\n\n" in doc else "\n"
    raise ValueError(f"unknown unit_mode {mode!r}")


def split_units(doc: str, mode: str) -> list[str]:
    """Split a document into units; join with the canonical separator to invert."""
    if not doc or not doc.strip():
        raise EmptyDocument("cannot split an empty document")
    if mode == MODE_SENTENCE:
        return _SENTENCE_BOUNDARY.split(doc)
    if mode == MODE_CODE_BLOCK:
        return doc.split(canonical_separator(doc, mode))
    raise ValueError(f"unknown unit_mode {mode!r}")


def _window_texts(units: list[str], sep: str) -> list[str]:
    # Unit plus one neighbor each side; neighbors keep lexical context local.
    return [sep.join(units[max(0, i - 1):i + 2]) for i in range(len(units))]


def breakpoint_indices(units: list[str], params: ChunkParams, embedder,
                       sep: str) -> list[int]:
    """Boundary indices i where distance(window_i, window_{i+1}) exceeds the
    per-document percentile threshold. Boundary i sits between unit i and i+1."""
    if len(units) < 2:
        return []
    vectors = [embedder.embed(w) if w.strip() else None for w in _window_texts(units, sep)]
    distances = np.empty(len(units) - 1, dtype=np.float64)
    for i in range(len(units) - 1):
        a, b = vectors[i], vectors[i + 1]
        distances[i] = 1.0 if (a is None or b is None) else 1.0 - cosine(a, b)
    threshold = float(np.percentile(distances, params.breakpoint_percentile))
    return [i for i, d in enumerate(distances) if d > threshold]


def _group_units(units: list[str], breaks: set[int], min_units: int) -> list[list[int]]:
    groups: list[list[int]] = []
    current = [0]
    for i in range(1, len(units)):
        if (i - 1) in breaks and len(current) >= min_units:
            groups.append(current)
            current = [i]
        else:
            current.append(i)
    groups.append(current)
    if len(groups) >= 2 and len(groups[-1]) < min_units:
        groups[-2].extend(groups.pop())
    # A group of only empty units would yield an empty chunk; fold it into a
    # neighbor (leading/trailing separators can produce empty units).
    merged: list[list[int]] = []
    for group in groups:
        if merged and all(not units[i] for i in group):
            merged[-1].extend(group)
        else:
            merged.append(group)
    if len(merged) >= 2 and all(not units[i] for i in merged[0]):
        head = merged.pop(0)
        merged[0] = head + merged[0]
    return merged


def _split_oversized_unit(unit: str, max_tokens: int, sep: str) -> list[str]:
    """Last-resort mid-unit split at whitespace, max_tokens words per piece.

    Interior whitespace travels with the left piece; a trailing canonical
    separator is trimmed because the join re-inserts it.
    """
    spans = list(_WORD_SPAN.finditer(unit))
    if len(spans) <= max_tokens:
        return [unit]
    pieces = []
    for start in range(0, len(spans), max_tokens):
        lo = spans[start].start() if start else 0
        nxt = start + max_tokens
        hi = spans[nxt].start() if nxt < len(spans) else len(unit)
        piece = unit[lo:hi]
        if nxt < len(spans) and piece.endswith(sep):
            piece = piece[:-len(sep)]
        pieces.append(piece)
    return pieces


def _enforce_budget(group: list[int], units: list[str], sep: str,
                    max_tokens: int) -> list[tuple[str, int, int]]:
    """Split one unit group into (text, first_unit, last_unit) pieces within budget."""
    raw: list[tuple[str, int, int]] = []
    cur: list[str] = []
    cur_tokens = 0
    cur_first = group[0]
    for idx in group:
        unit = units[idx]
        n = count_tokens(unit)
        if n > max_tokens:
            if cur:
                raw.append((sep.join(cur), cur_first, idx - 1))
                cur, cur_tokens = [], 0
            raw.extend((part, idx, idx)
                       for part in _split_oversized_unit(unit, max_tokens, sep))
            continue
        if cur and cur_tokens + n > max_tokens:
            raw.append((sep.join(cur), cur_first, idx - 1))
            cur, cur_tokens = [], 0
        if not cur:
            cur_first = idx
        cur.append(unit)
        cur_tokens += n
    if cur:
        raw.append((sep.join(cur), cur_first, group[-1]))
    # Fold blank pieces (runs of empty units) into a neighbor so no chunk
    # ends up with empty text; concatenating via sep keeps the join exact.
    merged: list[tuple[str, int, int]] = []
    for text, first, last in raw:
        if merged and (text == "" or not merged[-1][0].strip()):
            prev_text, prev_first, _ = merged[-1]
            merged[-1] = (prev_text + sep + text, prev_first, last)
        else:
            merged.append((text, first, last))
    return merged


def chunk(doc: str, params: ChunkParams, embedder, doc_id: str = "doc") -> list[Chunk]:
    """Chunk a document; ordered, contiguous, lossless under the canonical join."""
    if not doc or not doc.strip():
        raise EmptyDocument("cannot chunk an empty document")
    if params.max_chunk_tokens > embedder.profile.max_tokens:
        raise ValueError("max_chunk_tokens exceeds the embedder's token budget")
    mode = params.unit_mode
    units = split_units(doc, mode)
    sep = canonical_separator(doc, mode)
    breaks = set(breakpoint_indices(units, params, embedder, sep))
    groups = _group_units(units, breaks, params.min_units_per_chunk)

    chunks: list[Chunk] = []
    for group in groups:
        for text, first, last in _enforce_budget(group, units, sep,
                                                 params.max_chunk_tokens):
            chunks.append(Chunk(text=text, parent_doc_id=doc_id,
                                index=len(chunks), unit_span=(first, last)))
    return chunks
