"""Load, validate, and normalize CVE fix records.

Record files are line-delimited JSON (one record object per line, UTF-8)
preceded by a header line:

    {"format": "realvul-corpus", "version": 1}

A bundled 15-CVE manifest covering four projects (gpac, libtiff, linux,
pjsip) ships with the package; code bodies in the bundle are fixture stubs.
A converter entry point for normalized CVEfixes exports is provided instead
of SQL-dump parsing (header format "cvefixes-export").
"""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable

from .errors import DuplicateCve, EmptyManifest, MalformedRecord, UnsupportedVersion

log = logging.getLogger(__name__)

CORPUS_FORMAT = "realvul-corpus"
CORPUS_VERSION = 1
CVEFIXES_FORMAT = "cvefixes-export"
CVEFIXES_VERSION = 1

_CVE_ID_RE = re.compile(r"^CVE-\d{4}-\d{4,}$")
_CWE_ID_RE = re.compile(r"^CWE-\d+$")

KIND_VULNERABLE = "vulnerable"
KIND_PATCHED = "patched"
GT_YES = "yes"
GT_NO = "no"


@dataclass(frozen=True)
class FlawLocation:
    """Line range of a known flaw within the vulnerable code body."""

    start_line: int
    end_line: int

    def overlaps(self, lo: int, hi: int) -> bool:
        return self.start_line <= hi and lo <= self.end_line


@dataclass(frozen=True)
class CveRecord:
    """One CVE fix: vulnerable and patched code plus commit metadata."""

    cve_id: str
    cwe_id: str
    mitre_rank: int
    project: str
    language: str
    description: str
    vulnerable_code: str
    patched_code: str
    commit_message: str
    commit_hash: str
    flaw_locations: tuple[FlawLocation, ...] = ()

    def to_dict(self) -> dict:
        d = {
            "cve_id": self.cve_id,
            "cwe_id": self.cwe_id,
            "mitre_rank": self.mitre_rank,
            "project": self.project,
            "language": self.language,
            "description": self.description,
            "vulnerable_code": self.vulnerable_code,
            "patched_code": self.patched_code,
            "commit_message": self.commit_message,
            "commit_hash": self.commit_hash,
        }
        if self.flaw_locations:
            d["flaw_locations"] = [
                {"start_line": f.start_line, "end_line": f.end_line}
                for f in self.flaw_locations
            ]
        return d


@dataclass(frozen=True)
class CorpusManifest:
    """Validated, immutable collection of CVE records."""

    records: tuple[CveRecord, ...]
    source_tag: str
    loaded_at: datetime = field(default_factory=lambda: datetime.now(timezone.utc))

    def get(self, cve_id: str) -> CveRecord | None:
        for rec in self.records:
            if rec.cve_id == cve_id:
                return rec
        return None

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class Sample:
    """One evaluation target: a code body with its ground-truth label."""

    cve_id: str
    kind: str  # vulnerable | patched
    code: str
    ground_truth: str  # yes | no
    gt_reason: str


def _require(cond: bool, line_no: int, field_name: str, detail: str) -> None:
    if not cond:
        raise MalformedRecord(line_no, field_name, detail)


def _parse_flaw_locations(raw: object, line_no: int) -> tuple[FlawLocation, ...]:
    if raw is None:
        return ()
    _require(isinstance(raw, list), line_no, "flaw_locations", "must be a list")
    out = []
    for item in raw:
        _require(isinstance(item, dict), line_no, "flaw_locations", "entries must be objects")
        try:
            start = int(item["start_line"])
            end = int(item["end_line"])
        except (KeyError, TypeError, ValueError):
            raise MalformedRecord(
                line_no, "flaw_locations", "entries need integer start_line/end_line"
            ) from None
        _require(1 <= start <= end, line_no, "flaw_locations", "need 1 <= start_line <= end_line")
        out.append(FlawLocation(start, end))
    return tuple(out)


def record_from_dict(raw: dict, line_no: int = 0) -> CveRecord:
    """Validate one parsed record object; raises MalformedRecord on violation."""
    _require(isinstance(raw, dict), line_no, "record", "record line must be a JSON object")
    str_fields = (
        "cve_id", "cwe_id", "project", "language", "description",
        "vulnerable_code", "patched_code", "commit_message", "commit_hash",
    )
    for name in str_fields:
        value = raw.get(name)
        _require(isinstance(value, str), line_no, name, "missing or not a string")
    cve_id = raw["cve_id"]
    _require(bool(_CVE_ID_RE.match(cve_id)), line_no, "cve_id",
             f"{cve_id!r} does not match CVE-YYYY-NNNN")
    cwe_id = raw["cwe_id"]
    _require(bool(_CWE_ID_RE.match(cwe_id)), line_no, "cwe_id",
             f"{cwe_id!r} does not match CWE-N")
    rank = raw.get("mitre_rank")
    _require(isinstance(rank, int) and not isinstance(rank, bool) and rank >= 1,
             line_no, "mitre_rank", "must be an integer >= 1")
    vuln = raw["vulnerable_code"]
    patched = raw["patched_code"]
    _require(bool(vuln), line_no, "vulnerable_code", "must be non-empty")
    _require(bool(patched), line_no, "patched_code", "must be non-empty")
    _require(vuln != patched, line_no, "patched_code",
             "must differ from vulnerable_code")
    for name in ("project", "language", "description"):
        _require(bool(raw[name]), line_no, name, "must be non-empty")
    return CveRecord(
        cve_id=cve_id,
        cwe_id=cwe_id,
        mitre_rank=rank,
        project=raw["project"],
        language=raw["language"],
        description=raw["description"],
        vulnerable_code=vuln,
        patched_code=patched,
        commit_message=raw["commit_message"],
        commit_hash=raw["commit_hash"],
        flaw_locations=_parse_flaw_locations(raw.get("flaw_locations"), line_no),
    )


def _parse_header(line: str, line_no: int, expected_format: str) -> dict:
    try:
        header = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(line_no, "header", f"invalid JSON: {exc}") from None
    _require(isinstance(header, dict), line_no, "header", "header must be a JSON object")
    _require(header.get("format") == expected_format, line_no, "format",
             f"expected {expected_format!r}, got {header.get('format')!r}")
    return header


def _iter_record_lines(path: Path) -> Iterable[tuple[int, str]]:
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if stripped:
                yield line_no, stripped


def build_manifest(records: Iterable[CveRecord], source_tag: str) -> CorpusManifest:
    """Assemble a manifest from validated records, enforcing manifest invariants."""
    records = tuple(records)
    if not records:
        raise EmptyManifest(f"no records for manifest {source_tag!r}")
    seen: set[str] = set()
    for rec in records:
        if rec.cve_id in seen:
            raise DuplicateCve(f"duplicate cve_id {rec.cve_id}")
        seen.add(rec.cve_id)
    return CorpusManifest(records=records, source_tag=source_tag)


def load_manifest(path: str | Path, lenient: bool = False) -> CorpusManifest:
    """Load and validate a corpus manifest file.

    Strict mode aborts on the first invalid record; lenient mode logs a
    warning per bad record and keeps the rest.
    """
    path = Path(path)
    lines = iter(_iter_record_lines(path))
    try:
        header_no, header_line = next(lines)
    except StopIteration:
        raise EmptyManifest(f"{path} is empty") from None
    header = _parse_header(header_line, header_no, CORPUS_FORMAT)
    _require(header.get("version") == CORPUS_VERSION, header_no, "version",
             f"expected {CORPUS_VERSION}, got {header.get('version')!r}")

    records: list[CveRecord] = []
    seen: set[str] = set()
    for line_no, line in lines:
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            err: MalformedRecord | DuplicateCve = MalformedRecord(
                line_no, "record", f"invalid JSON: {exc}")
            if lenient:
                log.warning("skipping bad record: %s", err)
                continue
            raise err from None
        try:
            rec = record_from_dict(raw, line_no)
            if rec.cve_id in seen:
                raise DuplicateCve(f"line {line_no}: duplicate cve_id {rec.cve_id}")
        except (MalformedRecord, DuplicateCve) as exc:
            if lenient:
                log.warning("skipping bad record: %s", exc)
                continue
            raise
        seen.add(rec.cve_id)
        records.append(rec)

    if not records:
        raise EmptyManifest(f"{path} contains a header but no records")
    source_tag = header.get("source_tag") or path.name
    return CorpusManifest(records=tuple(records), source_tag=source_tag)


def save_manifest(manifest: CorpusManifest, path: str | Path) -> None:
    """Serialize a manifest; load_manifest(save_manifest(m)) is field-exact on records."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        header = {"format": CORPUS_FORMAT, "version": CORPUS_VERSION,
                  "source_tag": manifest.source_tag}
        fh.write(json.dumps(header, ensure_ascii=False) + "\n")
        for rec in manifest.records:
            fh.write(json.dumps(rec.to_dict(), ensure_ascii=False) + "\n")


def cwe_distribution(manifest: CorpusManifest) -> dict[str, int]:
    """Count records per CWE id; values sum to the record count."""
    return dict(Counter(rec.cwe_id for rec in manifest.records))


def _render_locations(locations: tuple[FlawLocation, ...]) -> str:
    parts = []
    for loc in locations:
        if loc.start_line == loc.end_line:
            parts.append(f"line {loc.start_line}")
        else:
            parts.append(f"lines {loc.start_line}-{loc.end_line}")
    return ", ".join(parts)


def reference_reason(record: CveRecord, kind: str) -> str:
    """Ground-truth reasoning text for one sample of a record.

    Falls back to the CVE description alone when no flaw locations are known.
    """
    if kind == KIND_VULNERABLE:
        if record.flaw_locations:
            return (f"{record.description} "
                    f"Flaw location: {_render_locations(record.flaw_locations)}.")
        return record.description
    return (f"The code is not vulnerable: the {record.cwe_id} issue "
            f"({record.description}) was fixed by the patch.")


def to_samples(manifest: CorpusManifest) -> list[Sample]:
    """Expand each record into a vulnerable and a patched sample (2x records)."""
    samples: list[Sample] = []
    for rec in manifest.records:
        samples.append(Sample(
            cve_id=rec.cve_id,
            kind=KIND_VULNERABLE,
            code=rec.vulnerable_code,
            ground_truth=GT_YES,
            gt_reason=reference_reason(rec, KIND_VULNERABLE),
        ))
        samples.append(Sample(
            cve_id=rec.cve_id,
            kind=KIND_PATCHED,
            code=rec.patched_code,
            ground_truth=GT_NO,
            gt_reason=reference_reason(rec, KIND_PATCHED),
        ))
    return samples


def field_filter(cwe_id: str | None = None, project: str | None = None
                 ) -> Callable[[CveRecord], bool]:
    """Predicate over records matching the given CWE id and/or project."""
    def predicate(rec: CveRecord) -> bool:
        if cwe_id is not None and rec.cwe_id != cwe_id:
            return False
        if project is not None and rec.project != project:
            return False
        return True
    return predicate


def import_cvefixes(path: str | Path,
                    where: Callable[[CveRecord], bool] | None = None
                    ) -> list[CveRecord]:
    """Read a normalized CVEfixes export and return validated records.

    The export shares the corpus record schema but may repeat cve_ids (one
    record per fixing commit); uniqueness is enforced only when building a
    manifest. Raises UnsupportedVersion on a format version other than 1.
    """
    path = Path(path)
    lines = iter(_iter_record_lines(path))
    try:
        header_no, header_line = next(lines)
    except StopIteration:
        raise EmptyManifest(f"{path} is empty") from None
    header = _parse_header(header_line, header_no, CVEFIXES_FORMAT)
    if header.get("version") != CVEFIXES_VERSION:
        raise UnsupportedVersion(
            f"cvefixes export version {header.get('version')!r}; "
            f"this build reads version {CVEFIXES_VERSION}")

    records: list[CveRecord] = []
    for line_no, line in lines:
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(line_no, "record", f"invalid JSON: {exc}") from None
        rec = record_from_dict(raw, line_no)
        if where is None or where(rec):
            records.append(rec)
    return records


def bundled_table1_path() -> Path:
    """Path of the bundled 15-CVE manifest (MITRE top-ranked 2023 CVEs)."""
    return Path(str(resources.files("vulnbench").joinpath("data/table1_cves.jsonl")))


def load_bundled_table1() -> CorpusManifest:
    return load_manifest(bundled_table1_path())
