"""Command-line entry point: ingest -> index -> run -> evaluate -> report,
plus a fully offline demo.

Subcommands: ingest, index-info, query, run, evaluate, report, demo.
Offline mode is the default; live providers need --live plus credentials in
the environment. Exit codes: 0 ok, 2 ingest, 3 run, 4 report, 64 usage.
Every subcommand takes --config <json file>; flags override config values,
and the effective config is echoed into the output directory.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import corpus as corpus_mod
from . import report as report_mod
from .chunker import MODE_CODE_BLOCK, MODE_SENTENCE, ChunkParams, chunk
from .embedder import EmbedderProfile, MockEmbedder, get_embedder
from .errors import LogParseError, VulnBenchError
from .evaluator import ScoringWeights, evaluate_response
from .harness import STATUS_OK, execute, plan_matrix, prepare_prompt, read_log
from .llm_gateway import (
    PROVIDER_REPLAY,
    Gateway,
    ModelProfile,
    RawResponse,
    ResponseCache,
    request_hash,
)
from .promptkit import Setting, Strategy
from .vectorstore import FIELD_KINDS, Payload, VectorStore, exclude_filter

log = logging.getLogger("vulnbench")

EXIT_OK = 0
EXIT_INGEST = 2
EXIT_RUN = 3
EXIT_REPORT = 4
EXIT_USAGE = 64

BUNDLED_CORPUS = "bundled:table1"

_FIELD_MODES = {
    "description": MODE_SENTENCE,
    "vulnerable_code": MODE_CODE_BLOCK,
    "patched_code": MODE_CODE_BLOCK,
    "commit_message": MODE_SENTENCE,
}


@dataclass
class Config:
    """Effective run configuration; offline mode forbids live providers."""

    mode: str = "offline"
    corpus: str = BUNDLED_CORPUS
    store: str = "store.vidx"
    out_dir: str = "out"
    log: str = "results.jsonl"
    replay_fixture: str = ""
    embedder: dict = field(default_factory=lambda: {
        "name": "mock", "dimension": 256, "max_tokens": 8191, "endpoint": ""})
    chunk: dict = field(default_factory=lambda: {
        "breakpoint_percentile": 95.0, "max_chunk_tokens": 512,
        "min_units_per_chunk": 1})
    models: list = field(default_factory=list)
    judge: dict | None = None
    weights: dict = field(default_factory=lambda: {"w1": 0.6, "w2": 0.3, "w3": 0.1})
    matrix: dict = field(default_factory=lambda: {
        "strategies": ["standard"], "settings": ["ZS", "FS"],
        "repeats": 1, "retrieval_k": 1})
    context_budget: int = 800
    alignment_threshold: float = 0.75
    max_workers: int = 1

    def validate(self) -> None:
        if self.mode not in ("offline", "live"):
            raise ValueError(f"mode must be offline or live, got {self.mode!r}")
        if self.mode == "offline":
            for spec in self.models:
                if spec.get("provider", PROVIDER_REPLAY) != PROVIDER_REPLAY:
                    raise ValueError(
                        f"offline mode forbids live provider profile "
                        f"{spec.get('name')!r}; pass --live to allow")
            if self.judge and self.judge.get("provider") != PROVIDER_REPLAY:
                raise ValueError("offline mode forbids a live judge profile")
        ScoringWeights(**self.weights)  # raises on invalid weights

    def to_dict(self) -> dict:
        return {
            "mode": self.mode, "corpus": self.corpus, "store": self.store,
            "out_dir": self.out_dir, "log": self.log,
            "replay_fixture": self.replay_fixture, "embedder": self.embedder,
            "chunk": self.chunk, "models": self.models, "judge": self.judge,
            "weights": self.weights, "matrix": self.matrix,
            "context_budget": self.context_budget,
            "alignment_threshold": self.alignment_threshold,
            "max_workers": self.max_workers,
        }


def load_config(path: str | None, overrides: dict) -> Config:
    cfg = Config()
    merged: dict = {}
    if path:
        merged.update(json.loads(Path(path).read_text("utf-8")))
    merged.update({k: v for k, v in overrides.items() if v is not None})
    for key, value in merged.items():
        if not hasattr(cfg, key):
            raise ValueError(f"unknown config key {key!r}")
        setattr(cfg, key, value)
    cfg.validate()
    return cfg


def echo_config(cfg: Config, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config_effective.json").write_text(
        json.dumps(cfg.to_dict(), indent=2, ensure_ascii=False) + "\n", "utf-8")


def _embedder_from_config(cfg: Config):
    spec = cfg.embedder
    profile = EmbedderProfile(
        name=spec.get("name", "mock"),
        dimension=int(spec.get("dimension", 256)),
        max_tokens=int(spec.get("max_tokens", 8191)),
    )
    if cfg.mode == "offline" or profile.name == "mock":
        return MockEmbedder(profile)
    return get_embedder(profile, spec.get("endpoint", ""),
                        spec.get("api_key_env", "EMBEDDING_API_KEY"))


def _model_from_dict(spec: dict) -> ModelProfile:
    return ModelProfile(
        name=spec["name"],
        provider=spec.get("provider", PROVIDER_REPLAY),
        context_window=int(spec.get("context_window", 128000)),
        endpoint=spec.get("endpoint", ""),
        temperature=float(spec.get("temperature", 0.0)),
        max_output_tokens=int(spec.get("max_output_tokens", 512)),
        api_key_env=spec.get("api_key_env", ""),
    )


def _load_corpus(cfg: Config, lenient: bool = False) -> corpus_mod.CorpusManifest:
    if cfg.corpus == BUNDLED_CORPUS:
        return corpus_mod.load_bundled_table1()
    return corpus_mod.load_manifest(cfg.corpus, lenient=lenient)


def _chunk_params(cfg: Config, unit_mode: str) -> ChunkParams:
    spec = cfg.chunk
    return ChunkParams(
        unit_mode=unit_mode,
        breakpoint_percentile=float(spec.get("breakpoint_percentile", 95.0)),
        max_chunk_tokens=int(spec.get("max_chunk_tokens", 512)),
        min_units_per_chunk=int(spec.get("min_units_per_chunk", 1)),
    )


def ingest_manifest(manifest, store: VectorStore, embedder, cfg: Config) -> dict:
    """Chunk and embed every record field into the store; returns counts
    per field kind."""
    counts = {kind: 0 for kind in FIELD_KINDS}
    for rec in manifest.records:
        fields = {
            "description": rec.description,
            "vulnerable_code": rec.vulnerable_code,
            "patched_code": rec.patched_code,
            "commit_message": rec.commit_message,
        }
        for kind, text in fields.items():
            if not text.strip():
                continue
            params = _chunk_params(cfg, _FIELD_MODES[kind])
            doc_id = f"{rec.cve_id}/{kind}"
            for piece in chunk(text, params, embedder, doc_id=doc_id):
                vector = embedder.embed(piece.text)
                store.upsert(vector, Payload(
                    cve_id=rec.cve_id, cwe_id=rec.cwe_id, project=rec.project,
                    language=rec.language, field_kind=kind,
                    chunk_index=piece.index, parent_doc_id=doc_id))
                counts[kind] += 1
    return counts


def cmd_ingest(args) -> int:
    try:
        cfg = load_config(args.config, {
            "corpus": args.corpus, "store": args.store, "out_dir": args.out,
            "mode": "live" if args.live else None,
        })
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        embedder = _embedder_from_config(cfg)
        if args.cvefixes_export:
            where = corpus_mod.field_filter(cwe_id=args.filter_cwe,
                                            project=args.filter_project)
            records = corpus_mod.import_cvefixes(args.cvefixes_export, where)
            manifest = corpus_mod.build_manifest(records, Path(args.cvefixes_export).name)
        else:
            manifest = _load_corpus(cfg, lenient=args.lenient)
        store = VectorStore(embedder.profile.dimension)
        counts = ingest_manifest(manifest, store, embedder, cfg)
        store.persist(cfg.store)
    except (VulnBenchError, OSError) as exc:
        print(f"ingest failed: {exc}", file=sys.stderr)
        return EXIT_INGEST
    echo_config(cfg, Path(cfg.out_dir))
    print(f"ingested {len(manifest)} records into {cfg.store} "
          f"({len(store)} points)")
    for kind in FIELD_KINDS:
        print(f"  {kind}: {counts[kind]} chunks")
    return EXIT_OK


def _store_path(args) -> str:
    if args.store:
        return args.store
    cfg = load_config(args.config, {})
    return cfg.store


def cmd_index_info(args) -> int:
    try:
        store = VectorStore.load(_store_path(args))
    except (VulnBenchError, OSError, ValueError) as exc:
        print(f"cannot read index: {exc}", file=sys.stderr)
        return EXIT_INGEST
    print(f"points: {len(store)}")
    print(f"dimension: {store.dimension}")
    for key in ("field_kind", "project", "cwe_id"):
        print(f"by {key}:")
        for value, count in sorted(store.payload_counts(key).items()):
            print(f"  {value}: {count}")
    return EXIT_OK


def cmd_query(args) -> int:
    try:
        store = VectorStore.load(_store_path(args))
        embedder = MockEmbedder(EmbedderProfile(dimension=store.dimension))
        where = exclude_filter(args.exclude_cve) if args.exclude_cve else None
        hits = store.search(embedder.embed(args.text), k=args.k, where=where)
    except (VulnBenchError, OSError, ValueError) as exc:
        print(f"query failed: {exc}", file=sys.stderr)
        return EXIT_INGEST
    for hit in hits:
        print(json.dumps({"point_id": hit.point_id, "score": round(hit.score, 6),
                          **hit.payload.to_dict()}, ensure_ascii=False))
    return EXIT_OK


def _build_plan(cfg: Config, manifest):
    samples = corpus_mod.to_samples(manifest)
    models = [_model_from_dict(m) for m in cfg.models]
    matrix = cfg.matrix
    return plan_matrix(
        models=models,
        strategies=[Strategy(s) for s in matrix.get("strategies", ["standard"])],
        settings=[Setting(s) for s in matrix.get("settings", ["ZS", "FS"])],
        samples=samples,
        repeats=int(matrix.get("repeats", 1)),
        retrieval_k=int(matrix.get("retrieval_k", 1)),
    )


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config, {
            "corpus": args.corpus, "store": args.store, "out_dir": args.out,
            "log": args.log, "replay_fixture": args.replay_fixture,
            "mode": "live" if args.live else None,
        })
        if not cfg.models:
            raise ValueError("no models configured")
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        manifest = _load_corpus(cfg)
        embedder = _embedder_from_config(cfg)
        plan = _build_plan(cfg, manifest)
        settings = [Setting(s) for s in cfg.matrix.get("settings", [])]
        store = None
        if Setting.FS in settings:
            store = VectorStore.load(cfg.store)
        gateway = Gateway(offline=(cfg.mode == "offline"),
                          replay_path=cfg.replay_fixture or None,
                          cache=ResponseCache())
        judge = _model_from_dict(cfg.judge) if cfg.judge else None
        out_dir = Path(cfg.out_dir)
        echo_config(cfg, out_dir)
        log_path = Path(cfg.log)

        done = {"n": 0}

        def progress(summary):
            done["n"] += 1
            if done["n"] % 25 == 0:
                print(f"  {done['n']}/{len(plan.cells)} cells "
                      f"(ok={summary.ok} errors={summary.errors})")

        summary = execute(
            plan, manifest=manifest, store=store, embedder=embedder,
            gateway=gateway, log_path=log_path,
            weights=ScoringWeights(**cfg.weights), judge=judge,
            alignment_threshold=cfg.alignment_threshold,
            context_budget=cfg.context_budget, resume=args.resume,
            fail_fast=args.fail_fast, max_workers=cfg.max_workers,
            progress=progress)
    except (VulnBenchError, OSError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_RUN
    print(f"{summary.executed} executed, {summary.skipped} skipped "
          f"(ok={summary.ok}, errors={summary.errors}) -> {log_path}")
    if summary.errors and not args.allow_errors:
        return EXIT_RUN
    return EXIT_OK


def cmd_evaluate(args) -> int:
    """Re-score an existing log from its stored raw responses with new
    weights, a new alignment threshold, or a new judge; no target-model
    calls are made."""
    try:
        cfg = load_config(args.config, {"corpus": args.corpus})
        weights = ScoringWeights(w1=args.w1, w2=args.w2, w3=args.w3) \
            if args.w1 is not None else ScoringWeights(**cfg.weights)
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        manifest = _load_corpus(cfg)
        embedder = _embedder_from_config(cfg)
        threshold = (args.alignment_threshold
                     if args.alignment_threshold is not None
                     else cfg.alignment_threshold)
        judge = _model_from_dict(cfg.judge) if cfg.judge else None
        gateway = Gateway(offline=(cfg.mode == "offline"),
                          replay_path=cfg.replay_fixture or None,
                          cache=ResponseCache()) if judge else None
        samples = {(s.cve_id, s.kind): s for s in corpus_mod.to_samples(manifest)}
        header, entries = read_log(args.log)
        out_path = Path(args.out)
        rescored = 0
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(header, ensure_ascii=False) + "\n")
            for entry in entries:
                if entry.get("status") == STATUS_OK and "response" in entry:
                    sample = samples[(entry["cve_id"], entry["kind"])]
                    record = manifest.get(entry["cve_id"])
                    raw = RawResponse(
                        text=entry["response"]["text"],
                        model_name=entry["model"],
                        latency_ms=entry["response"].get("latency_ms", 0),
                        request_hash=entry["response"].get("request_hash", ""),
                        finish_reason=entry["response"].get("finish_reason", "stop"))
                    verdict, evaluation = evaluate_response(
                        raw, sample, record, embedder, weights,
                        judge=judge, gateway=gateway,
                        alignment_threshold=threshold)
                    entry = dict(entry)
                    entry["verdict"] = {
                        "prediction": verdict.prediction,
                        "reason_summary": verdict.reason_summary,
                        "claimed_cwe": verdict.claimed_cwe,
                        "claimed_location": verdict.claimed_location,
                    }
                    entry["eval"] = {
                        "acc": evaluation.acc, "cs": evaluation.cs,
                        "pcs": evaluation.pcs, "aligned": evaluation.aligned,
                        "sm": evaluation.sm, "outcome": evaluation.outcome,
                        "judge_name": evaluation.judge_name,
                        "judge_prompt_hash": evaluation.judge_prompt_hash,
                    }
                    rescored += 1
                fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
    except (VulnBenchError, OSError, KeyError) as exc:
        print(f"evaluate failed: {exc}", file=sys.stderr)
        return EXIT_RUN
    print(f"re-scored {rescored} entries -> {out_path}")
    return EXIT_OK


def cmd_report(args) -> int:
    formats = tuple(f.strip() for f in args.formats.split(",") if f.strip())
    unknown = set(formats) - {report_mod.FORMAT_TABLE, report_mod.FORMAT_PLOT}
    if unknown:
        print(f"unknown formats: {sorted(unknown)}", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args.config, {})
        log_path = args.log or cfg.log
        out_dir = args.out or str(Path(cfg.out_dir) / "report")
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        artifacts = report_mod.artifacts_from_log(log_path)
        paths = report_mod.emit(artifacts, out_dir, formats)
        echo_config(cfg, Path(out_dir))
    except (LogParseError, VulnBenchError, OSError) as exc:
        print(f"report failed: {exc}", file=sys.stderr)
        return EXIT_REPORT
    for path in paths:
        print(path)
    return EXIT_OK


# --- demo ---------------------------------------------------------------

_GOOD_REASON_TRIM = 6


def synthesize_demo_response(cell, sample, record, prompt) -> str:
    """Deterministic stand-in model reply for the offline demo fixture.

    Keyed by the request-hash roll so the fixture covers all three outcome
    classes with a spread of reasoning quality.
    """
    roll = int(hashlib.sha256(prompt.prompt_hash().encode()).hexdigest()[:8], 16) % 100
    truth_yes = sample.ground_truth == "yes"
    if roll < 55:
        prediction = "Yes" if truth_yes else "No"
        words = sample.gt_reason.split()
        reason = " ".join(words[:max(len(words) - _GOOD_REASON_TRIM, 8)])
        if truth_yes:
            reason += f" ({record.cwe_id})"
    elif roll < 80:
        prediction = "Yes" if truth_yes else "No"
        reason = "The code might behave unexpectedly for some inputs."
    else:
        prediction = "No" if truth_yes else "Yes"
        reason = "Static inspection suggests the opposite of the reference label."
    lines = []
    if cell.strategy is Strategy.DECOMPOSITION:
        lines.append("Step 1: The snippet handles externally supplied data.")
        lines.append(f"Step 2: {prediction}.")
        lines.append("Step 3: See reasoning below.")
    lines.append(f"Prediction: {prediction}")
    lines.append(f"Reason: {reason}")
    return "\n".join(lines)


def cmd_demo(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    n_cves = max(3, args.cves)
    cfg = Config(
        mode="offline",
        corpus=BUNDLED_CORPUS,
        store=str(out_dir / "store.vidx"),
        out_dir=str(out_dir),
        log=str(out_dir / "results.jsonl"),
        replay_fixture=str(out_dir / "replay.jsonl"),
        embedder={"name": "mock", "dimension": args.dimension, "max_tokens": 8191},
        chunk={"breakpoint_percentile": 95.0, "max_chunk_tokens": 256,
               "min_units_per_chunk": 1},
        models=[{"name": "demo-replay", "provider": PROVIDER_REPLAY,
                 "context_window": 128000, "max_output_tokens": 256}],
        matrix={"strategies": ["standard", "decomposition"],
                "settings": ["ZS", "FS"], "repeats": 1, "retrieval_k": 1},
    )
    try:
        full = corpus_mod.load_bundled_table1()
        manifest = corpus_mod.build_manifest(full.records[:n_cves], "demo")
        embedder = _embedder_from_config(cfg)
        store = VectorStore(embedder.profile.dimension)
        counts = ingest_manifest(manifest, store, embedder, cfg)
        store.persist(cfg.store)
        print(f"ingest: {len(store)} points "
              f"({', '.join(f'{k}={v}' for k, v in counts.items())})")

        plan = _build_plan(cfg, manifest)
        print(f"plan: {len(plan.cells)} cells")

        # Build the replay fixture from the deterministic stand-in model.
        fixture_path = Path(cfg.replay_fixture)
        if fixture_path.exists():
            fixture_path.unlink()
        gateway = Gateway(offline=True, replay_path=fixture_path,
                          cache=ResponseCache())
        profile = _model_from_dict(cfg.models[0])
        samples = {(s.cve_id, s.kind): s for s in plan.samples}
        for cell in plan.cells:
            sample = samples[(cell.cve_id, cell.kind)]
            prompt = prepare_prompt(cell, sample, manifest, store, embedder,
                                    plan.retrieval_k, cfg.context_budget)
            text = synthesize_demo_response(
                cell, sample, manifest.get(cell.cve_id), prompt)
            gateway.record(profile, prompt, RawResponse(
                text=text, model_name=profile.name, latency_ms=0,
                request_hash=request_hash(profile, prompt)))
        print(f"fixture: {gateway.fixture_size()} canned responses")

        log_path = Path(cfg.log)
        if log_path.exists():
            log_path.unlink()
        summary = execute(
            plan, manifest=manifest, store=store, embedder=embedder,
            gateway=gateway, log_path=log_path,
            weights=ScoringWeights(**cfg.weights),
            alignment_threshold=cfg.alignment_threshold,
            context_budget=cfg.context_budget)
        print(f"run: {summary.ok} ok, {summary.errors} errors -> {log_path}")

        artifacts = report_mod.artifacts_from_log(log_path)
        paths = report_mod.emit(artifacts, out_dir / "report")
        echo_config(cfg, out_dir)
        print(f"report: {len(paths)} files in {out_dir / 'report'}")
    except (VulnBenchError, OSError) as exc:
        print(f"demo failed: {exc}", file=sys.stderr)
        return EXIT_RUN
    if summary.errors:
        return EXIT_RUN
    print("demo complete")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vulnbench",
        description="LLM vulnerability-detection benchmark pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--live", action="store_true",
                       help="allow live providers (default: offline)")

    p = sub.add_parser("ingest", help="chunk, embed, and index a corpus")
    add_common(p)
    p.add_argument("--corpus", help=f"manifest path or {BUNDLED_CORPUS}")
    p.add_argument("--cvefixes-export", help="normalized CVEfixes export to convert")
    p.add_argument("--filter-cwe", help="keep only this CWE id from the export")
    p.add_argument("--filter-project", help="keep only this project from the export")
    p.add_argument("--store", help="index file to write")
    p.add_argument("--out", help="output directory", default="out")
    p.add_argument("--lenient", action="store_true",
                   help="warn and skip invalid records instead of aborting")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("index-info", help="print stats of an index file")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--store", help="index path (default: config store)")
    p.set_defaults(func=cmd_index_info)

    p = sub.add_parser("query", help="ad-hoc vector search against an index")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--store", help="index path (default: config store)")
    p.add_argument("--text", required=True)
    p.add_argument("-k", type=int, default=5)
    p.add_argument("--exclude-cve", help="leakage filter: drop this CVE from hits")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("run", help="execute the experiment matrix")
    add_common(p)
    p.add_argument("--corpus")
    p.add_argument("--store")
    p.add_argument("--log", help="result log path")
    p.add_argument("--replay-fixture", help="replay fixture path")
    p.add_argument("--out", help="output directory")
    p.add_argument("--resume", action="store_true",
                   help="skip cells already present in the log")
    p.add_argument("--fail-fast", action="store_true")
    p.add_argument("--allow-errors", action="store_true",
                   help="exit 0 even when some cells errored")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("evaluate", help="re-score an existing log with new weights")
    p.add_argument("--config")
    p.add_argument("--corpus")
    p.add_argument("--log", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--w1", type=float)
    p.add_argument("--w2", type=float)
    p.add_argument("--w3", type=float)
    p.add_argument("--alignment-threshold", type=float)
    p.set_defaults(func=cmd_evaluate, live=False)

    p = sub.add_parser("report", help="aggregate a result log into tables and plots")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--log", help="result log (default: config log)")
    p.add_argument("--out", help="output directory (default: config out_dir/report)")
    p.add_argument("--formats", default="table,plot")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("demo", help="full offline pipeline on the bundled corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--cves", type=int, default=15,
                   help="number of bundled CVEs to use (>= 3)")
    p.add_argument("--dimension", type=int, default=256,
                   help="mock embedding dimension")
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    return args.func(args)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
