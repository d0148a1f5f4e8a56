from __future__ import annotations

import json
import socket

import pytest

from vulnbench.corpus import CorpusManifest, CveRecord, FlawLocation, load_bundled_table1
from vulnbench.embedder import EmbedderProfile, MockEmbedder


@pytest.fixture(scope="session")
def table1():
    return load_bundled_table1()


@pytest.fixture()
def mock_embedder():
    return MockEmbedder(EmbedderProfile(dimension=128))


def make_record(cve_id="CVE-2023-1111", cwe_id="CWE-787", project="demo",
                rank=1, vuln="memcpy(dst, src, n);\n", patched="if (n <= cap) memcpy(dst, src, n);\n",
                description="writes past the end of a fixed buffer",
                flaws=((2, 3),)) -> CveRecord:
    return CveRecord(
        cve_id=cve_id, cwe_id=cwe_id, mitre_rank=rank, project=project,
        language="C", description=description,
        vulnerable_code=vuln, patched_code=patched,
        commit_message=f"{project}: bounds-check the copy",
        commit_hash="0" * 40,
        flaw_locations=tuple(FlawLocation(a, b) for a, b in flaws),
    )


def make_manifest(records) -> CorpusManifest:
    return CorpusManifest(records=tuple(records), source_tag="test")


def write_corpus_file(path, records, header=None):
    header = header or {"format": "realvul-corpus", "version": 1}
    lines = [json.dumps(header)]
    for rec in records:
        lines.append(json.dumps(rec if isinstance(rec, dict) else rec.to_dict()))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture()
def no_network(monkeypatch):
    """Fail the test if anything opens a socket."""
    def guard(*args, **kwargs):
        raise AssertionError("network access attempted during an offline test")
    monkeypatch.setattr(socket.socket, "connect", guard)
    monkeypatch.setattr(socket, "create_connection", guard)
    return guard
