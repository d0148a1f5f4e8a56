"""Enumerate and execute the experiment matrix with retrieval, caching,
and resumable logging.

A plan is the cross product models x strategies x settings x samples x
repeats, enumerated in that nesting order; each cell gets a stable digest
id. Few-shot cells embed the target code, search the store under the
leakage filter (the target's own CVE is always excluded), and assemble the
retrieved example into the prompt. Per-cell failures are recorded in the
log with status=error and never abort the run unless fail_fast is set.

The result log is line-delimited JSON: a header line carrying the plan
digest and template hash, then one entry per cell, append-only. Re-running
with resume=True skips cell ids already present.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .corpus import CorpusManifest, Sample
from .errors import EmptyAxis, LogParseError, NoContextAvailable, VulnBenchError
from .evaluator import Evaluation, ScoringWeights, Verdict, evaluate_response
from .llm_gateway import Gateway, ModelProfile
from .promptkit import (
    RenderedPrompt,
    Setting,
    Strategy,
    assemble_context,
    render,
    template_fingerprint,
)
from .vectorstore import VectorStore, exclude_filter

log = logging.getLogger(__name__)

LOG_FORMAT = "vulnbench-results"
LOG_VERSION = 1

STATUS_OK = "ok"
STATUS_ERROR = "error"


@dataclass(frozen=True)
class RunCell:
    model: str
    strategy: Strategy
    setting: Setting
    cve_id: str
    kind: str
    repeat: int

    @property
    def cell_id(self) -> str:
        key = "|".join((self.model, self.strategy.value, self.setting.value,
                        self.cve_id, self.kind, str(self.repeat)))
        return hashlib.sha256(key.encode("utf-8")).hexdigest()[:16]


@dataclass
class RunPlan:
    models: list[ModelProfile]
    strategies: list[Strategy]
    settings: list[Setting]
    samples: list[Sample]
    repeats: int
    retrieval_k: int
    cells: list[RunCell] = field(default_factory=list)

    def digest(self) -> str:
        h = hashlib.sha256()
        for cell in self.cells:
            h.update(cell.cell_id.encode("ascii"))
        return h.hexdigest()


@dataclass
class RunSummary:
    executed: int = 0
    skipped: int = 0
    ok: int = 0
    errors: int = 0


def plan_matrix(models: list[ModelProfile], strategies: list[Strategy],
                settings: list[Setting], samples: list[Sample],
                repeats: int = 1, retrieval_k: int = 1) -> RunPlan:
    """Cross product of all axes in deterministic order; |cells| equals the
    product of the axis sizes."""
    if not models:
        raise EmptyAxis("no models configured")
    if not strategies:
        raise EmptyAxis("no strategies configured")
    if not settings:
        raise EmptyAxis("no settings configured")
    if not samples:
        raise EmptyAxis("no samples configured")
    if repeats < 1:
        raise EmptyAxis("repeats must be >= 1")
    strategies = [Strategy(s) for s in strategies]
    settings = [Setting(s) for s in settings]
    cells = [
        RunCell(model=model.name, strategy=strategy, setting=setting,
                cve_id=sample.cve_id, kind=sample.kind, repeat=repeat)
        for model in models
        for strategy in strategies
        for setting in settings
        for sample in samples
        for repeat in range(1, repeats + 1)
    ]
    plan = RunPlan(models=models, strategies=strategies, settings=settings,
                   samples=samples, repeats=repeats, retrieval_k=retrieval_k,
                   cells=cells)
    seen = {c.cell_id for c in cells}
    if len(seen) != len(cells):
        raise VulnBenchError("cell id collision in plan")  # cryptographic digest: unreachable
    return plan


def prepare_prompt(cell: RunCell, sample: Sample, manifest: CorpusManifest,
                   store: VectorStore | None, embedder, retrieval_k: int,
                   context_budget: int) -> RenderedPrompt:
    """Render the prompt for one cell, retrieving context for FS cells.

    The target's own CVE is excluded from retrieval; an empty result after
    filtering raises NoContextAvailable.
    """
    if cell.setting is Setting.ZS:
        return render(cell.strategy, cell.setting, sample)
    if store is None:
        raise NoContextAvailable("few-shot cells require a vector store")
    query = embedder.embed(sample.code)
    hits = store.search(query, k=retrieval_k, where=exclude_filter(sample.cve_id))
    if not hits:
        raise NoContextAvailable(
            f"no retrievable context for {sample.cve_id} after the leakage filter")
    if retrieval_k <= 1:
        context = assemble_context(hits, manifest, context_budget)
        blocks = [context]
    else:
        blocks = []
        seen_cves: set[str] = set()
        for hit in hits:
            if hit.payload.cve_id in seen_cves:
                continue
            seen_cves.add(hit.payload.cve_id)
            blocks.append(assemble_context([hit], manifest, context_budget))
    return render(cell.strategy, cell.setting, sample, blocks)


def _entry_from_result(cell: RunCell, prompt: RenderedPrompt, raw,
                       verdict: Verdict, evaluation: Evaluation,
                       wall_ms: int, template_hash: str) -> dict:
    if cell.setting is Setting.FS and prompt.context_ref == cell.cve_id:
        raise VulnBenchError("leakage: context source equals target cve_id")
    return {
        "cell_id": cell.cell_id,
        "status": STATUS_OK,
        "model": cell.model,
        "strategy": cell.strategy.value,
        "setting": cell.setting.value,
        "cve_id": cell.cve_id,
        "kind": cell.kind,
        "repeat": cell.repeat,
        "prompt_hash": prompt.prompt_hash(),
        "template_hash": template_hash,
        "context_cve": prompt.context_ref,
        "response": {
            "text": raw.text,
            "finish_reason": raw.finish_reason,
            "latency_ms": raw.latency_ms,
            "request_hash": raw.request_hash,
        },
        "verdict": {
            "prediction": verdict.prediction,
            "reason_summary": verdict.reason_summary,
            "claimed_cwe": verdict.claimed_cwe,
            "claimed_location": verdict.claimed_location,
        },
        "eval": {
            "acc": evaluation.acc,
            "cs": evaluation.cs,
            "pcs": evaluation.pcs,
            "aligned": evaluation.aligned,
            "sm": evaluation.sm,
            "outcome": evaluation.outcome,
            "judge_name": evaluation.judge_name,
            "judge_prompt_hash": evaluation.judge_prompt_hash,
        },
        "wall_ms": wall_ms,
    }


def _error_entry(cell: RunCell, exc: Exception, wall_ms: int) -> dict:
    return {
        "cell_id": cell.cell_id,
        "status": STATUS_ERROR,
        "model": cell.model,
        "strategy": cell.strategy.value,
        "setting": cell.setting.value,
        "cve_id": cell.cve_id,
        "kind": cell.kind,
        "repeat": cell.repeat,
        "error": f"{type(exc).__name__}: {exc}",
        "wall_ms": wall_ms,
    }


def log_header(plan: RunPlan) -> dict:
    return {
        "log_format": LOG_FORMAT,
        "version": LOG_VERSION,
        "plan_digest": plan.digest(),
        "template_hash": template_fingerprint(),
        "created_at": datetime.now(timezone.utc).isoformat(),
    }


def read_log(path: str | Path) -> tuple[dict, list[dict]]:
    """Parse a result log into (header, entries); bad lines carry line numbers."""
    path = Path(path)
    header: dict | None = None
    entries: list[dict] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise LogParseError(line_no, f"invalid JSON: {exc.msg}") from None
            if not isinstance(obj, dict):
                raise LogParseError(line_no, "log line is not an object")
            if header is None:
                if obj.get("log_format") != LOG_FORMAT:
                    raise LogParseError(line_no, "missing or foreign log header")
                if obj.get("version") != LOG_VERSION:
                    raise LogParseError(line_no, f"unsupported log version {obj.get('version')!r}")
                header = obj
                continue
            if "cell_id" not in obj or "status" not in obj:
                raise LogParseError(line_no, "entry missing cell_id/status")
            entries.append(obj)
    if header is None:
        raise LogParseError(1, "log has no header line")
    return header, entries


def _existing_cell_ids(path: Path) -> set[str]:
    if not path.exists():
        return set()
    _, entries = read_log(path)
    return {e["cell_id"] for e in entries}


def execute(plan: RunPlan, *, manifest: CorpusManifest,
            store: VectorStore | None, embedder, gateway: Gateway,
            log_path: str | Path, weights: ScoringWeights = ScoringWeights(),
            judge: ModelProfile | None = None,
            alignment_threshold: float = 0.75, context_budget: int = 800,
            resume: bool = False, fail_fast: bool = False,
            max_workers: int = 1,
            progress=None) -> RunSummary:
    """Run every cell of the plan, appending one log entry per cell.

    Entries are written in plan order regardless of worker count, so two
    offline executions of the same plan differ only in timestamp/latency
    fields.
    """
    log_path = Path(log_path)
    profiles = {m.name: m for m in plan.models}
    samples = {(s.cve_id, s.kind): s for s in plan.samples}
    done = _existing_cell_ids(log_path) if resume else set()
    summary = RunSummary()
    template_hash = template_fingerprint()

    fresh_log = not (resume and log_path.exists())
    mode = "w" if fresh_log else "a"

    def run_cell(cell: RunCell) -> dict:
        started = time.monotonic()
        sample = samples[(cell.cve_id, cell.kind)]
        try:
            prompt = prepare_prompt(cell, sample, manifest, store, embedder,
                                    plan.retrieval_k, context_budget)
            raw = gateway.complete(profiles[cell.model], prompt)
            record = manifest.get(cell.cve_id)
            verdict, evaluation = evaluate_response(
                raw, sample, record, embedder, weights,
                judge=judge, gateway=gateway,
                alignment_threshold=alignment_threshold)
            wall_ms = int((time.monotonic() - started) * 1000)
            return _entry_from_result(cell, prompt, raw, verdict, evaluation,
                                      wall_ms, template_hash)
        except VulnBenchError as exc:
            if fail_fast:
                raise
            wall_ms = int((time.monotonic() - started) * 1000)
            log.warning("cell %s failed: %s", cell.cell_id, exc)
            return _error_entry(cell, exc, wall_ms)

    pending = [cell for cell in plan.cells if cell.cell_id not in done]
    summary.skipped = len(plan.cells) - len(pending)

    def consume(results, fh):
        for entry in results:
            fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
            summary.executed += 1
            if entry["status"] == STATUS_OK:
                summary.ok += 1
            else:
                summary.errors += 1
            if progress is not None:
                progress(summary)

    with open(log_path, mode, encoding="utf-8") as fh:
        if fresh_log:
            fh.write(json.dumps(log_header(plan), ensure_ascii=False) + "\n")
        if max_workers <= 1:
            consume(map(run_cell, pending), fh)
        else:
            with concurrent.futures.ThreadPoolExecutor(max_workers=max_workers) as pool:
                consume(pool.map(run_cell, pending), fh)
    return summary
