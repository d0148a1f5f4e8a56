"""Aggregate result logs into tables and static plots.

Four artifact families: per-(model, setting) outcome breakdowns, a
model x CVE heatmap of correct-prediction-correct-reasoning counts,
per-prompt-strategy curves, and a composite-score histogram split by
outcome class. Tables are CSV with pinned column order; plots are SVG
rendered deterministically. All aggregation is a pure function of the
log's evaluated entries, so re-running emits identical table bytes.

Percentages render to one decimal with half-up rounding (25/80 -> 31.3).
Histogram bins are width 0.05 over [0, 1], binned in decimal arithmetic on
the score's shortest repr; 1.0 lands in the top bin.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from .errors import EmptyLog
from .evaluator import OUTCOMES
from .harness import STATUS_OK, read_log
from .promptkit import STRATEGY_LABELS, Strategy

N_BINS = 20
BIN_WIDTH = Decimal("0.05")

_STRATEGY_ORDER = {s.value: i for i, s in enumerate(Strategy)}

FORMAT_TABLE = "table"
FORMAT_PLOT = "plot"


def evaluated_entries(entries: list[dict]) -> list[dict]:
    return [e for e in entries if e.get("status") == STATUS_OK and "eval" in e]


def render_pct(count: int, total: int) -> Decimal:
    """Percentage with one decimal, rounded half away from zero."""
    return (Decimal(count) * 100 / Decimal(total)).quantize(
        Decimal("0.1"), rounding=ROUND_HALF_UP)


@dataclass(frozen=True)
class BreakdownRow:
    model: str
    group: str
    cp_cr: int
    cp_icr: int
    icp_icr: int

    @property
    def total(self) -> int:
        return self.cp_cr + self.cp_icr + self.icp_icr


@dataclass(frozen=True)
class OutcomeBreakdown:
    group_by: str
    rows: tuple[BreakdownRow, ...]


@dataclass(frozen=True)
class HeatmapMatrix:
    models: tuple[str, ...]
    cve_ids: tuple[str, ...]
    counts: dict  # (model, cve_id) -> cp_cr count


@dataclass(frozen=True)
class PromptCurve:
    curves: dict  # model -> {strategy: cp_cr count}


@dataclass(frozen=True)
class SmHistogram:
    bin_edges: tuple[Decimal, ...]  # 21 edges over [0, 1]
    counts: dict  # outcome -> [count per bin]
    total: int


def outcome_breakdown(entries: list[dict], group_by: str = "setting") -> OutcomeBreakdown:
    """Outcome counts per (model, setting); group_by="strategy" regroups."""
    if group_by not in ("setting", "strategy"):
        raise ValueError("group_by must be 'setting' or 'strategy'")
    rows = evaluated_entries(entries)
    if not rows:
        raise EmptyLog("no evaluated entries to aggregate")
    tally: dict[tuple[str, str], dict[str, int]] = {}
    for entry in rows:
        key = (entry["model"], entry[group_by])
        bucket = tally.setdefault(key, {o: 0 for o in OUTCOMES})
        bucket[entry["eval"]["outcome"]] += 1
    out = [
        BreakdownRow(model=model, group=group,
                     cp_cr=bucket["CP_CR"], cp_icr=bucket["CP_ICR"],
                     icp_icr=bucket["ICP_ICR"])
        for (model, group), bucket in sorted(tally.items())
    ]
    return OutcomeBreakdown(group_by=group_by, rows=tuple(out))


def heatmap_matrix(entries: list[dict]) -> HeatmapMatrix:
    """CP_CR counts keyed by (model, cve_id); absent pairs count zero."""
    rows = evaluated_entries(entries)
    if not rows:
        raise EmptyLog("no evaluated entries to aggregate")
    models = sorted({e["model"] for e in rows})
    cve_ids = sorted({e["cve_id"] for e in rows})
    counts = {(m, c): 0 for m in models for c in cve_ids}
    for entry in rows:
        if entry["eval"]["outcome"] == "CP_CR":
            counts[(entry["model"], entry["cve_id"])] += 1
    return HeatmapMatrix(models=tuple(models), cve_ids=tuple(cve_ids), counts=counts)


def prompt_curves(entries: list[dict]) -> PromptCurve:
    """CP_CR counts per (model, strategy)."""
    rows = evaluated_entries(entries)
    if not rows:
        raise EmptyLog("no evaluated entries to aggregate")
    curves: dict[str, dict[str, int]] = {}
    for entry in rows:
        series = curves.setdefault(entry["model"], {})
        series.setdefault(entry["strategy"], 0)
        if entry["eval"]["outcome"] == "CP_CR":
            series[entry["strategy"]] += 1
    return PromptCurve(curves=curves)


def _bin_index(sm: float) -> int:
    idx = int(Decimal(repr(sm)) / BIN_WIDTH)
    return min(idx, N_BINS - 1)


def sm_histogram(entries: list[dict]) -> SmHistogram:
    """Composite-score distribution, binned per outcome class."""
    rows = evaluated_entries(entries)
    if not rows:
        raise EmptyLog("no evaluated entries to aggregate")
    counts = {outcome: [0] * N_BINS for outcome in OUTCOMES}
    for entry in rows:
        counts[entry["eval"]["outcome"]][_bin_index(entry["eval"]["sm"])] += 1
    edges = tuple(BIN_WIDTH * i for i in range(N_BINS + 1))
    return SmHistogram(bin_edges=edges, counts=counts, total=len(rows))


@dataclass(frozen=True)
class ReportArtifacts:
    breakdown: OutcomeBreakdown
    heatmap: HeatmapMatrix
    curves: PromptCurve
    histogram: SmHistogram


def build_artifacts(entries: list[dict]) -> ReportArtifacts:
    return ReportArtifacts(
        breakdown=outcome_breakdown(entries),
        heatmap=heatmap_matrix(entries),
        curves=prompt_curves(entries),
        histogram=sm_histogram(entries),
    )


def artifacts_from_log(path: str | Path) -> ReportArtifacts:
    _, entries = read_log(path)
    return build_artifacts(entries)


def _sorted_strategies(names) -> list[str]:
    return sorted(names, key=lambda s: _STRATEGY_ORDER.get(s, len(_STRATEGY_ORDER)))


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _emit_tables(artifacts: ReportArtifacts, out_dir: Path) -> list[Path]:
    paths = []
    b = artifacts.breakdown
    path = out_dir / "breakdown.csv"
    _write_csv(path,
               ["model", b.group_by, "cp_cr", "cp_icr", "icp_icr", "total",
                "pct_cp_cr", "pct_cp_icr", "pct_icp_icr"],
               [[r.model, r.group, r.cp_cr, r.cp_icr, r.icp_icr, r.total,
                 str(render_pct(r.cp_cr, r.total)),
                 str(render_pct(r.cp_icr, r.total)),
                 str(render_pct(r.icp_icr, r.total))]
                for r in b.rows])
    paths.append(path)

    h = artifacts.heatmap
    path = out_dir / "heatmap.csv"
    _write_csv(path, ["model", "cve_id", "cp_cr"],
               [[m, c, h.counts[(m, c)]] for m in h.models for c in h.cve_ids])
    paths.append(path)

    path = out_dir / "curves.csv"
    rows = []
    for model in sorted(artifacts.curves.curves):
        series = artifacts.curves.curves[model]
        for strategy in _sorted_strategies(series):
            rows.append([model, strategy, series[strategy]])
    _write_csv(path, ["model", "strategy", "cp_cr"], rows)
    paths.append(path)

    hist = artifacts.histogram
    path = out_dir / "histogram.csv"
    rows = []
    for i in range(N_BINS):
        for outcome in OUTCOMES:
            rows.append([str(hist.bin_edges[i]), str(hist.bin_edges[i + 1]),
                         outcome, hist.counts[outcome][i]])
    _write_csv(path, ["bin_lo", "bin_hi", "outcome", "count"], rows)
    paths.append(path)
    return paths


_OUTCOME_COLORS = {"CP_CR": "#3a7d2c", "CP_ICR": "#c9a227", "ICP_ICR": "#ad2e24"}


def _plt():
    import matplotlib
    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "vulnbench"
    import matplotlib.pyplot as plt
    return plt


def _save(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})


def _emit_plots(artifacts: ReportArtifacts, out_dir: Path) -> list[Path]:
    plt = _plt()
    paths = []

    b = artifacts.breakdown
    labels = [f"{r.model} ({r.group})" for r in b.rows]
    y = range(len(b.rows))
    fig, ax = plt.subplots(figsize=(7, 0.5 * len(b.rows) + 1.5))
    left = [0] * len(b.rows)
    for outcome, attr in (("CP_CR", "cp_cr"), ("CP_ICR", "cp_icr"), ("ICP_ICR", "icp_icr")):
        widths = [getattr(r, attr) for r in b.rows]
        ax.barh(list(y), widths, left=left, label=outcome.replace("_", "-"),
                color=_OUTCOME_COLORS[outcome])
        left = [a + w for a, w in zip(left, widths)]
    ax.set_yticks(list(y), labels)
    ax.set_xlabel("Number of Samples")
    ax.legend(loc="lower right", fontsize=8)
    ax.set_title("Outcomes per model and setting")
    fig.tight_layout()
    path = out_dir / "breakdown.svg"
    _save(fig, path)
    plt.close(fig)
    paths.append(path)

    h = artifacts.heatmap
    grid = [[h.counts[(m, c)] for c in h.cve_ids] for m in h.models]
    fig, ax = plt.subplots(figsize=(0.6 * len(h.cve_ids) + 2, 0.5 * len(h.models) + 1.5))
    image = ax.imshow(grid, cmap="Greens", aspect="auto")
    ax.set_xticks(range(len(h.cve_ids)), h.cve_ids, rotation=45,
                  ha="right", fontsize=7)
    ax.set_yticks(range(len(h.models)), h.models, fontsize=8)
    for i in range(len(h.models)):
        for j in range(len(h.cve_ids)):
            ax.text(j, i, str(grid[i][j]), ha="center", va="center", fontsize=7)
    fig.colorbar(image, ax=ax, shrink=0.8)
    ax.set_title("Correct prediction and reasoning per model x CVE")
    fig.tight_layout()
    path = out_dir / "heatmap.svg"
    _save(fig, path)
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(6, 4))
    for model in sorted(artifacts.curves.curves):
        series = artifacts.curves.curves[model]
        names = _sorted_strategies(series)
        values = [series[s] for s in names]
        labels = [STRATEGY_LABELS.get(Strategy(s), s) if s in _STRATEGY_ORDER else s
                  for s in names]
        ax.plot(labels, values, marker="o", label=model)
    ax.set_xlabel("Prompt")
    ax.set_ylabel("Correct Predictions")
    ax.grid(True, linewidth=0.3)
    ax.legend(fontsize=8)
    ax.set_title("Correct prediction and reasoning by prompt strategy")
    fig.tight_layout()
    path = out_dir / "curves.svg"
    _save(fig, path)
    plt.close(fig)
    paths.append(path)

    hist = artifacts.histogram
    centers = [float(hist.bin_edges[i] + BIN_WIDTH / 2) for i in range(N_BINS)]
    fig, ax = plt.subplots(figsize=(6, 4))
    bottom = [0] * N_BINS
    for outcome in OUTCOMES:
        ax.bar(centers, hist.counts[outcome], width=0.045, bottom=bottom,
               label=outcome.replace("_", "-"), color=_OUTCOME_COLORS[outcome])
        bottom = [a + c for a, c in zip(bottom, hist.counts[outcome])]
    ax.set_xlabel("Composite score")
    ax.set_ylabel("Count")
    ax.legend(fontsize=8)
    ax.set_title("Score distribution by outcome class")
    fig.tight_layout()
    path = out_dir / "histogram.svg"
    _save(fig, path)
    plt.close(fig)
    paths.append(path)
    return paths


def emit(artifacts: ReportArtifacts, out_dir: str | Path,
         formats=(FORMAT_TABLE, FORMAT_PLOT)) -> list[Path]:
    """Write the selected artifact families; returns the file list."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths: list[Path] = []
    if FORMAT_TABLE in formats:
        paths.extend(_emit_tables(artifacts, out_dir))
    if FORMAT_PLOT in formats:
        paths.extend(_emit_plots(artifacts, out_dir))
    return paths
