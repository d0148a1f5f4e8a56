from __future__ import annotations

import random

import numpy as np
import pytest

from vulnbench.chunker import (
    MODE_CODE_BLOCK,
    MODE_SENTENCE,
    ChunkParams,
    breakpoint_indices,
    canonical_separator,
    chunk,
    split_units,
)
from vulnbench.embedder import EmbedderProfile, MockEmbedder, cosine, count_tokens
from vulnbench.errors import EmptyDocument

WORDS = ("alpha bravo charlie delta echo foxtrot golf hotel india juliet kilo "
         "lima mike november oscar papa quebec romeo sierra tango").split()

CODE_WORDS = ("memcpy strcpy malloc free buffer index size offset pointer "
              "header packet length count total parse read write check").split()


def embedder(dim=64):
    return MockEmbedder(EmbedderProfile(dimension=dim))


def random_sentence_doc(rng: random.Random, n_sentences: int) -> str:
    sentences = []
    for _ in range(n_sentences):
        words = rng.choices(WORDS, k=rng.randint(3, 9))
        sentences.append(" ".join(words) + rng.choice(".!?"))
    return " ".join(sentences)


def random_code_doc(rng: random.Random, n_blocks: int) -> str:
    blocks = []
    for _ in range(n_blocks):
        lines = [" ".join(rng.choices(CODE_WORDS, k=rng.randint(2, 6)))
                 for _ in range(rng.randint(1, 4))]
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks)


# --- split_units ----------------------------------------------------------

def test_sentence_split_basic():
    assert split_units("A. B. C.", MODE_SENTENCE) == ["A.", "B.", "C."]


def test_code_split_on_blank_lines():
    doc = "int f() {\n  return 1;\n}\n\nint g() {\n  return 2;\n}"
    assert len(split_units(doc, MODE_CODE_BLOCK)) == 2


def test_code_split_falls_back_to_single_lines():
    doc = "line one\nline two\nline three"
    assert split_units(doc, MODE_CODE_BLOCK) == ["line one", "line two", "line three"]
    assert canonical_separator(doc, MODE_CODE_BLOCK) == "\n"


def test_seven_sentence_fixture_round_trips_exactly():
    doc = ("The parser reads a header. It trusts the length field! "
           "Is that safe? No bounds check exists. The copy overflows. "
           "A patch was written. It clamps the size.")
    units = split_units(doc, MODE_SENTENCE)
    assert len(units) == 7
    assert canonical_separator(doc, MODE_SENTENCE).join(units) == doc


def test_split_empty_document():
    with pytest.raises(EmptyDocument):
        split_units("", MODE_SENTENCE)
    with pytest.raises(EmptyDocument):
        split_units("   ", MODE_CODE_BLOCK)


def test_split_round_trip_on_random_docs():
    rng = random.Random(7)
    for _ in range(50):
        doc = random_sentence_doc(rng, rng.randint(1, 12))
        sep = canonical_separator(doc, MODE_SENTENCE)
        assert sep.join(split_units(doc, MODE_SENTENCE)) == doc
    for _ in range(50):
        doc = random_code_doc(rng, rng.randint(1, 8))
        sep = canonical_separator(doc, MODE_CODE_BLOCK)
        assert sep.join(split_units(doc, MODE_CODE_BLOCK)) == doc


# --- chunk ------------------------------------------------------------------

def test_single_unit_doc_becomes_one_chunk():
    emb = embedder()
    out = chunk("just one sentence here.", ChunkParams(), emb)
    assert len(out) == 1
    assert out[0].text == "just one sentence here."
    assert out[0].index == 0


def oracle_breakpoints(units, sep, emb, percentile):
    """Independent straight-line reimplementation of the distance rule."""
    if len(units) < 2:
        return []
    windows = [sep.join(units[max(0, i - 1):i + 2]) for i in range(len(units))]
    vectors = [emb.embed(w) for w in windows]
    distances = [1.0 - cosine(vectors[i], vectors[i + 1])
                 for i in range(len(units) - 1)]
    threshold = float(np.percentile(np.asarray(distances), percentile))
    return [i for i, d in enumerate(distances) if d > threshold]


def test_breakpoints_match_oracle_on_two_topic_doc():
    emb = embedder()
    doc = ("alpha bravo charlie delta. alpha bravo charlie echo. "
           "alpha charlie bravo delta. zebra unrelated cosmic quantum. "
           "zebra cosmic quantum neutrino. zebra quantum cosmic flux.")
    params = ChunkParams(breakpoint_percentile=80.0)
    units = split_units(doc, MODE_SENTENCE)
    sep = canonical_separator(doc, MODE_SENTENCE)
    ours = breakpoint_indices(units, params, emb, sep)
    assert ours == oracle_breakpoints(units, sep, emb, 80.0)
    assert len(ours) >= 1  # the topic shift is the clear outlier


def test_breakpoints_match_oracle_on_random_docs():
    emb = embedder()
    rng = random.Random(13)
    for _ in range(20):
        doc = random_sentence_doc(rng, rng.randint(2, 15))
        percentile = rng.choice([50.0, 75.0, 90.0, 95.0])
        params = ChunkParams(breakpoint_percentile=percentile)
        units = split_units(doc, MODE_SENTENCE)
        sep = canonical_separator(doc, MODE_SENTENCE)
        assert breakpoint_indices(units, params, emb, sep) == \
            oracle_breakpoints(units, sep, emb, percentile)


def test_losslessness_and_budget_on_random_docs():
    emb = embedder()
    rng = random.Random(42)
    params_s = ChunkParams(unit_mode=MODE_SENTENCE, max_chunk_tokens=64)
    params_c = ChunkParams(unit_mode=MODE_CODE_BLOCK, max_chunk_tokens=64)
    for i in range(200):
        if i % 2 == 0:
            doc = random_sentence_doc(rng, rng.randint(1, 14))
            params, mode = params_s, MODE_SENTENCE
        else:
            doc = random_code_doc(rng, rng.randint(1, 10))
            params, mode = params_c, MODE_CODE_BLOCK
        chunks = chunk(doc, params, emb)
        sep = canonical_separator(doc, mode)
        assert sep.join(c.text for c in chunks) == doc
        assert all(count_tokens(c.text) <= params.max_chunk_tokens for c in chunks)
        assert [c.index for c in chunks] == list(range(len(chunks)))
        assert all(c.text for c in chunks)


def test_budget_enforced_on_uniform_long_doc():
    emb = MockEmbedder(EmbedderProfile(dimension=32, max_tokens=20000))
    doc = " ".join("alpha bravo charlie delta echo." for _ in range(2000))  # 10k tokens
    params = ChunkParams(max_chunk_tokens=512)
    chunks = chunk(doc, params, emb)
    assert all(count_tokens(c.text) <= 512 for c in chunks)
    assert canonical_separator(doc, MODE_SENTENCE).join(c.text for c in chunks) == doc


def test_mid_unit_split_when_single_unit_exceeds_budget():
    emb = embedder()
    doc = " ".join(f"tok{i}" for i in range(40))  # one sentence-less unit
    chunks = chunk(doc, ChunkParams(max_chunk_tokens=16), emb)
    assert all(count_tokens(c.text) <= 16 for c in chunks)
    assert " ".join(c.text for c in chunks) == doc  # space-separated cut stays exact


def test_determinism_under_mock_embedder():
    emb = embedder()
    doc = random_sentence_doc(random.Random(3), 12)
    params = ChunkParams(breakpoint_percentile=70.0, max_chunk_tokens=32)
    first = chunk(doc, params, emb)
    second = chunk(doc, params, emb)
    assert [(c.text, c.unit_span) for c in first] == \
        [(c.text, c.unit_span) for c in second]


def test_percentile_monotonicity():
    emb = embedder()
    rng = random.Random(21)
    for _ in range(10):
        doc = random_sentence_doc(rng, rng.randint(4, 16))
        units = split_units(doc, MODE_SENTENCE)
        sep = canonical_separator(doc, MODE_SENTENCE)
        counts = []
        for pct in (25.0, 50.0, 75.0, 90.0, 99.0):
            params = ChunkParams(breakpoint_percentile=pct)
            counts.append(len(breakpoint_indices(units, params, emb, sep)))
        assert counts == sorted(counts, reverse=True)


def test_chunk_rejects_budget_above_embedder_limit():
    emb = MockEmbedder(EmbedderProfile(dimension=16, max_tokens=100))
    with pytest.raises(ValueError):
        chunk("a b c.", ChunkParams(max_chunk_tokens=101), emb)


def test_params_validation():
    with pytest.raises(ValueError):
        ChunkParams(breakpoint_percentile=0.0)
    with pytest.raises(ValueError):
        ChunkParams(breakpoint_percentile=101.0)
    with pytest.raises(ValueError):
        ChunkParams(unit_mode="paragraph")


def test_unit_spans_are_contiguous():
    emb = embedder()
    doc = random_sentence_doc(random.Random(9), 10)
    chunks = chunk(doc, ChunkParams(breakpoint_percentile=50.0), emb)
    units = split_units(doc, MODE_SENTENCE)
    spans = [c.unit_span for c in chunks]
    assert spans[0][0] == 0
    assert spans[-1][1] == len(units) - 1
    for prev, cur in zip(spans, spans[1:]):
        assert cur[0] in (prev[1], prev[1] + 1)  # mid-unit pieces share a unit
