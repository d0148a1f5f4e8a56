from __future__ import annotations

import random

import pytest

from vulnbench import cli, corpus
from vulnbench.embedder import EmbedderProfile, MockEmbedder
from vulnbench.errors import EmptyAxis, LogParseError, NoContextAvailable
from vulnbench.harness import (
    RunCell,
    execute,
    plan_matrix,
    prepare_prompt,
    read_log,
)
from vulnbench.llm_gateway import (
    PROVIDER_REPLAY,
    Gateway,
    ModelProfile,
    RawResponse,
    ResponseCache,
    request_hash,
)
from vulnbench.promptkit import Setting, Strategy
from vulnbench.vectorstore import VectorStore

from conftest import make_manifest, make_record

CWES = ("CWE-787", "CWE-476", "CWE-190", "CWE-416")


def varied_records(n, prefix="CVE-2023-81"):
    records = []
    for i in range(n):
        cwe = CWES[i % len(CWES)]
        records.append(make_record(
            cve_id=f"{prefix}{i:02d}",
            cwe_id=cwe,
            project=("gpac", "libtiff", "linux")[i % 3],
            vuln=(f"static int handler_{i}(pkt_t *p) {{\n"
                  f"    char buf_{i}[32];\n"
                  f"    memcpy(buf_{i}, p->data, p->len_{i});\n"
                  f"    return use_{i}(buf_{i});\n}}\n"),
            patched=(f"static int handler_{i}(pkt_t *p) {{\n"
                     f"    char buf_{i}[32];\n"
                     f"    if (p->len_{i} > sizeof(buf_{i})) return -1;\n"
                     f"    memcpy(buf_{i}, p->data, p->len_{i});\n"
                     f"    return use_{i}(buf_{i});\n}}\n"),
            description=f"handler {i} copies a packet without checking length field {i}",
        ))
    return records


def replay_model(name="demo-replay"):
    return ModelProfile(name=name, provider=PROVIDER_REPLAY,
                        context_window=128000, max_output_tokens=256)


def build_env(tmp_path, n_records=4, strategies=(Strategy.STANDARD,),
              settings=(Setting.ZS, Setting.FS), repeats=1, dim=64):
    manifest = make_manifest(varied_records(n_records))
    embedder = MockEmbedder(EmbedderProfile(dimension=dim))
    store = VectorStore(dim)
    cfg = cli.Config(embedder={"name": "mock", "dimension": dim},
                     chunk={"max_chunk_tokens": 128})
    cli.ingest_manifest(manifest, store, embedder, cfg)
    plan = plan_matrix(models=[replay_model()], strategies=list(strategies),
                       settings=list(settings),
                       samples=corpus.to_samples(manifest), repeats=repeats)
    gateway = Gateway(offline=True, replay_path=tmp_path / "fixture.jsonl",
                      cache=ResponseCache())
    samples = {(s.cve_id, s.kind): s for s in plan.samples}
    profile = plan.models[0]
    for cell in plan.cells:
        sample = samples[(cell.cve_id, cell.kind)]
        prompt = prepare_prompt(cell, sample, manifest, store, embedder,
                                plan.retrieval_k, 800)
        text = cli.synthesize_demo_response(cell, sample,
                                            manifest.get(cell.cve_id), prompt)
        gateway.record(profile, prompt, RawResponse(
            text=text, model_name=profile.name, latency_ms=0,
            request_hash=request_hash(profile, prompt)))
    return manifest, store, embedder, gateway, plan


# --- plan_matrix ------------------------------------------------------------

def test_paper_factors_yield_120_cells(table1):
    plan = plan_matrix(models=[replay_model()], strategies=[Strategy.STANDARD],
                       settings=[Setting.ZS, Setting.FS],
                       samples=corpus.to_samples(table1), repeats=2)
    assert len(plan.cells) == 120  # 1 * 1 * 2 * 30 * 2


def test_two_models_four_strategies_paper_factors(table1):
    plan = plan_matrix(
        models=[replay_model("a"), replay_model("b")],
        strategies=list(Strategy),
        settings=[Setting.ZS, Setting.FS],
        samples=corpus.to_samples(table1), repeats=2)
    assert len(plan.cells) == 960


def test_degenerate_single_cell():
    manifest = make_manifest(varied_records(1))
    samples = [s for s in corpus.to_samples(manifest) if s.kind == "vulnerable"]
    plan = plan_matrix(models=[replay_model()], strategies=[Strategy.STANDARD],
                       settings=[Setting.ZS], samples=samples, repeats=1)
    assert len(plan.cells) == 1


def test_empty_axes_raise(table1):
    samples = corpus.to_samples(table1)
    with pytest.raises(EmptyAxis):
        plan_matrix(models=[], strategies=[Strategy.STANDARD],
                    settings=[Setting.ZS], samples=samples)
    with pytest.raises(EmptyAxis):
        plan_matrix(models=[replay_model()], strategies=[],
                    settings=[Setting.ZS], samples=samples)
    with pytest.raises(EmptyAxis):
        plan_matrix(models=[replay_model()], strategies=[Strategy.STANDARD],
                    settings=[], samples=samples)
    with pytest.raises(EmptyAxis):
        plan_matrix(models=[replay_model()], strategies=[Strategy.STANDARD],
                    settings=[Setting.ZS], samples=[])
    with pytest.raises(EmptyAxis):
        plan_matrix(models=[replay_model()], strategies=[Strategy.STANDARD],
                    settings=[Setting.ZS], samples=samples, repeats=0)


def test_cell_ids_unique_and_order_deterministic(table1):
    samples = corpus.to_samples(table1)
    p1 = plan_matrix(models=[replay_model()], strategies=list(Strategy),
                     settings=[Setting.ZS, Setting.FS], samples=samples, repeats=2)
    p2 = plan_matrix(models=[replay_model()], strategies=list(Strategy),
                     settings=[Setting.ZS, Setting.FS], samples=samples, repeats=2)
    ids1 = [c.cell_id for c in p1.cells]
    assert len(set(ids1)) == len(ids1)
    assert ids1 == [c.cell_id for c in p2.cells]
    assert p1.digest() == p2.digest()


def test_cardinality_under_axis_fuzzing(table1):
    rng = random.Random(99)
    all_samples = corpus.to_samples(table1)
    for _ in range(50):
        n_models = rng.randint(1, 3)
        n_strategies = rng.randint(1, 4)
        n_settings = rng.randint(1, 2)
        n_samples = rng.randint(1, len(all_samples))
        repeats = rng.randint(1, 3)
        plan = plan_matrix(
            models=[replay_model(f"m{i}") for i in range(n_models)],
            strategies=list(Strategy)[:n_strategies],
            settings=[Setting.ZS, Setting.FS][:n_settings],
            samples=all_samples[:n_samples], repeats=repeats)
        assert len(plan.cells) == n_models * n_strategies * n_settings * n_samples * repeats


# --- execute ------------------------------------------------------------------

def test_offline_execute_all_ok(tmp_path):
    manifest, store, embedder, gateway, plan = build_env(tmp_path)
    log_path = tmp_path / "results.jsonl"
    summary = execute(plan, manifest=manifest, store=store, embedder=embedder,
                      gateway=gateway, log_path=log_path)
    assert summary.executed == len(plan.cells)
    assert summary.ok == len(plan.cells)
    assert summary.errors == 0
    header, entries = read_log(log_path)
    assert header["plan_digest"] == plan.digest()
    assert len(entries) == len(plan.cells)
    assert all(e["status"] == "ok" for e in entries)


def test_resume_skips_everything(tmp_path):
    manifest, store, embedder, gateway, plan = build_env(tmp_path)
    log_path = tmp_path / "results.jsonl"
    execute(plan, manifest=manifest, store=store, embedder=embedder,
            gateway=gateway, log_path=log_path)
    calls_before = gateway.provider_calls
    summary = execute(plan, manifest=manifest, store=store, embedder=embedder,
                      gateway=gateway, log_path=log_path, resume=True)
    assert summary.executed == 0
    assert summary.skipped == len(plan.cells)
    assert gateway.provider_calls == calls_before


def test_fs_with_only_target_in_store_is_no_context_error(tmp_path):
    manifest = make_manifest(varied_records(1))
    embedder = MockEmbedder(EmbedderProfile(dimension=32))
    store = VectorStore(32)
    cfg = cli.Config(embedder={"name": "mock", "dimension": 32})
    cli.ingest_manifest(manifest, store, embedder, cfg)  # only the target CVE
    plan = plan_matrix(models=[replay_model()], strategies=[Strategy.STANDARD],
                       settings=[Setting.FS],
                       samples=corpus.to_samples(manifest))
    gateway = Gateway(offline=True, replay_path=tmp_path / "f.jsonl")
    log_path = tmp_path / "results.jsonl"
    summary = execute(plan, manifest=manifest, store=store, embedder=embedder,
                      gateway=gateway, log_path=log_path)
    assert summary.errors == len(plan.cells)
    _, entries = read_log(log_path)
    assert all("NoContextAvailable" in e["error"] for e in entries)


def test_prepare_prompt_no_context_raises(tmp_path):
    manifest = make_manifest(varied_records(1))
    embedder = MockEmbedder(EmbedderProfile(dimension=32))
    store = VectorStore(32)
    cfg = cli.Config(embedder={"name": "mock", "dimension": 32})
    cli.ingest_manifest(manifest, store, embedder, cfg)
    sample = corpus.to_samples(manifest)[0]
    cell = RunCell(model="m", strategy=Strategy.STANDARD, setting=Setting.FS,
                   cve_id=sample.cve_id, kind=sample.kind, repeat=1)
    with pytest.raises(NoContextAvailable):
        prepare_prompt(cell, sample, manifest, store, embedder, 1, 800)


def test_leakage_guard_property(tmp_path):
    rng = random.Random(4)
    for round_no in range(8):
        n = rng.randint(2, 6)
        base = tmp_path / f"round{round_no}"
        base.mkdir()
        manifest, store, embedder, gateway, plan = build_env(
            base, n_records=n,
            strategies=(Strategy.STANDARD,), settings=(Setting.FS,))
        log_path = base / "results.jsonl"
        execute(plan, manifest=manifest, store=store, embedder=embedder,
                gateway=gateway, log_path=log_path)
        _, entries = read_log(log_path)
        for entry in entries:
            assert entry["status"] == "ok"
            assert entry["context_cve"] is not None
            assert entry["context_cve"] != entry["cve_id"]


def test_offline_determinism_up_to_timing(tmp_path):
    def strip_timing(entry):
        entry = dict(entry)
        entry.pop("wall_ms", None)
        if "response" in entry:
            entry["response"] = {k: v for k, v in entry["response"].items()
                                 if k != "latency_ms"}
        return entry

    logs = []
    for run in range(2):
        base = tmp_path / f"run{run}"
        base.mkdir()
        manifest, store, embedder, gateway, plan = build_env(base)
        log_path = base / "results.jsonl"
        execute(plan, manifest=manifest, store=store, embedder=embedder,
                gateway=gateway, log_path=log_path)
        _, entries = read_log(log_path)
        logs.append([strip_timing(e) for e in entries])
    assert logs[0] == logs[1]


def test_parallel_workers_write_plan_order(tmp_path):
    manifest, store, embedder, gateway, plan = build_env(tmp_path, n_records=3)
    log_path = tmp_path / "parallel.jsonl"
    summary = execute(plan, manifest=manifest, store=store, embedder=embedder,
                      gateway=gateway, log_path=log_path, max_workers=4)
    assert summary.ok == len(plan.cells)
    _, entries = read_log(log_path)
    assert [e["cell_id"] for e in entries] == [c.cell_id for c in plan.cells]


def test_fs_entries_reference_context_and_prompt_hashes(tmp_path):
    manifest, store, embedder, gateway, plan = build_env(tmp_path)
    log_path = tmp_path / "results.jsonl"
    execute(plan, manifest=manifest, store=store, embedder=embedder,
            gateway=gateway, log_path=log_path)
    _, entries = read_log(log_path)
    for entry in entries:
        assert len(entry["prompt_hash"]) == 64
        if entry["setting"] == "FS":
            assert entry["context_cve"]
        else:
            assert entry["context_cve"] is None


def test_read_log_reports_corrupt_line(tmp_path):
    manifest, store, embedder, gateway, plan = build_env(tmp_path, n_records=2)
    log_path = tmp_path / "results.jsonl"
    execute(plan, manifest=manifest, store=store, embedder=embedder,
            gateway=gateway, log_path=log_path)
    lines = log_path.read_text().splitlines()
    lines[2] = "{broken json"
    log_path.write_text("\n".join(lines) + "\n")
    with pytest.raises(LogParseError) as err:
        read_log(log_path)
    assert err.value.line_no == 3


def test_fail_fast_propagates(tmp_path):
    manifest = make_manifest(varied_records(1))
    embedder = MockEmbedder(EmbedderProfile(dimension=32))
    store = VectorStore(32)
    cfg = cli.Config(embedder={"name": "mock", "dimension": 32})
    cli.ingest_manifest(manifest, store, embedder, cfg)
    plan = plan_matrix(models=[replay_model()], strategies=[Strategy.STANDARD],
                       settings=[Setting.FS], samples=corpus.to_samples(manifest))
    gateway = Gateway(offline=True, replay_path=tmp_path / "f.jsonl")
    with pytest.raises(NoContextAvailable):
        execute(plan, manifest=manifest, store=store, embedder=embedder,
                gateway=gateway, log_path=tmp_path / "r.jsonl", fail_fast=True)


def test_repeat_cells_hit_the_response_cache(tmp_path):
    manifest, store, embedder, gateway, plan = build_env(
        tmp_path, n_records=2, repeats=2)
    log_path = tmp_path / "repeats.jsonl"
    summary = execute(plan, manifest=manifest, store=store, embedder=embedder,
                      gateway=gateway, log_path=log_path)
    assert summary.ok == len(plan.cells)
    # Repeat cells render identical prompts, so each unique request reaches
    # the backend once and the second repeat is served from the cache.
    unique_prompts = len({c.cell_id for c in plan.cells}) // 2
    assert gateway.cache.hits >= unique_prompts
    _, entries = read_log(log_path)
    by_repeat = {}
    for e in entries:
        by_repeat.setdefault((e["cve_id"], e["kind"], e["setting"]), []).append(e)
    for pair in by_repeat.values():
        assert len(pair) == 2
        assert pair[0]["response"]["text"] == pair[1]["response"]["text"]
