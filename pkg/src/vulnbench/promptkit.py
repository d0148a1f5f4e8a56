"""Render the eight prompt variants (4 strategies x ZS/FS) and assemble
retrieved context into the in-context example template.

Wording lives in versioned template files under templates/; a hash over
those files is recorded into run logs so prompt revisions are traceable.
The retrieved example renders between the four context markers
(--DESCRIPTION--, "Vulnerable Code:", "Fixed Code:", --COMMITMSG--); the
user prompt always carries the Prediction/Reason format contract plus the
CWE request so partial-correctness scoring has something to grade.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum
from importlib import resources

from .corpus import CorpusManifest, Sample
from .embedder import count_tokens
from .errors import BudgetTooSmall, MissingContext, UnexpectedContext, UnresolvableParent
from .vectorstore import SearchHit


class Strategy(str, Enum):
    STANDARD = "standard"
    CHAIN_OF_THOUGHT = "chain_of_thought"
    DECOMPOSITION = "decomposition"
    PLAN_AND_SOLVE = "plan_and_solve"


class Setting(str, Enum):
    ZS = "ZS"
    FS = "FS"


STRATEGY_LABELS = {
    Strategy.STANDARD: "P-S",
    Strategy.CHAIN_OF_THOUGHT: "P-CoT",
    Strategy.DECOMPOSITION: "P-Decomp",
    Strategy.PLAN_AND_SOLVE: "P-P&S",
}

CONTEXT_MARKERS = ("--DESCRIPTION--", "Vulnerable Code:", "Fixed Code:", "--COMMITMSG--")

TRUNCATION_MARKER = "... [truncated]"

_CWE_MEANINGS = {
    "CWE-787": "Out-of-Bounds Write",
    "CWE-476": "NULL Pointer Dereference",
    "CWE-190": "Integer Overflow",
    "CWE-416": "Use After-Free",
    "CWE-125": "Out-of-Bounds Read",
    "CWE-119": "Improper Restriction of Operations within the Bounds of a Memory Buffer",
}

_TEMPLATE_NAMES = (
    "system_fs.txt", "system_zs.txt", "context_block.txt",
    "context_description.txt",
    "user_standard.txt", "user_chain_of_thought.txt",
    "user_decomposition.txt", "user_plan_and_solve.txt",
    "judge_extract.txt", "judge_align.txt", "judge_pcs.txt",
)

_template_cache: dict[str, str] = {}


def load_template(name: str) -> str:
    if name not in _template_cache:
        text = resources.files("vulnbench").joinpath(f"templates/{name}").read_text("utf-8")
        _template_cache[name] = text.rstrip("\n")
    return _template_cache[name]


def fill(template: str, **values: str) -> str:
    """Substitute {name} placeholders; substituted text is never re-scanned."""
    out = template
    for key, value in values.items():
        out = out.replace("{" + key + "}", value)
    return out


def template_fingerprint() -> str:
    """Stable digest over all template files; recorded for provenance."""
    digest = hashlib.sha256()
    for name in _TEMPLATE_NAMES:
        digest.update(name.encode("utf-8"))
        digest.update(b"\x00")
        digest.update(load_template(name).encode("utf-8"))
        digest.update(b"\x00")
    return digest.hexdigest()


def cwe_meaning(cwe_id: str) -> str:
    return _CWE_MEANINGS.get(cwe_id, f"weakness class {cwe_id}")


@dataclass(frozen=True)
class ContextBlock:
    """One retrieved in-context example, ready to render."""

    description: str
    vulnerable_code: str
    fixed_code: str
    commit_message: str
    source_cve_id: str


@dataclass(frozen=True)
class RenderedPrompt:
    system_text: str
    user_text: str
    strategy: Strategy
    setting: Setting
    target_sample_ref: tuple[str, str]  # (cve_id, kind)
    context_ref: str | None
    token_estimate: int

    def prompt_hash(self) -> str:
        digest = hashlib.sha256()
        digest.update(self.system_text.encode("utf-8"))
        digest.update(b"\x00")
        digest.update(self.user_text.encode("utf-8"))
        return digest.hexdigest()


def render_context_block(block: ContextBlock) -> str:
    return fill(
        load_template("context_block.txt"),
        description=block.description,
        vulnerable_code=block.vulnerable_code,
        fixed_code=block.fixed_code,
        commit_message=block.commit_message,
    )


def _description_sentence(record) -> str:
    return fill(
        load_template("context_description.txt"),
        project=record.project,
        language=record.language,
        cwe_id=record.cwe_id,
        cwe_meaning=cwe_meaning(record.cwe_id),
        description=record.description,
    )


def _truncate_symmetric(vuln_lines: list[str], fixed_lines: list[str],
                        skeleton_tokens: int, budget: int) -> tuple[str, str]:
    """Drop trailing code lines from the longer section until within budget."""
    vuln = list(vuln_lines)
    fixed = list(fixed_lines)
    truncated_v = truncated_f = False

    def total() -> int:
        tokens = skeleton_tokens
        tokens += sum(count_tokens(line) for line in vuln)
        tokens += sum(count_tokens(line) for line in fixed)
        if truncated_v:
            tokens += count_tokens(TRUNCATION_MARKER)
        if truncated_f:
            tokens += count_tokens(TRUNCATION_MARKER)
        return tokens

    while total() > budget and (vuln or fixed):
        if len(vuln) >= len(fixed) and vuln:
            vuln.pop()
            truncated_v = True
        else:
            fixed.pop()
            truncated_f = True
    if truncated_v:
        vuln.append(TRUNCATION_MARKER)
    if truncated_f:
        fixed.append(TRUNCATION_MARKER)
    return "\n".join(vuln), "\n".join(fixed)


def assemble_context(hits: list[SearchHit], corpus: CorpusManifest,
                     budget: int) -> ContextBlock:
    """Build the in-context example from the top hit's parent record.

    Code sections are truncated symmetrically on line boundaries to fit the
    token budget; a truncation marker is appended to any cut section.
    """
    if not hits:
        raise ValueError("assemble_context requires at least one hit")
    cve_id = hits[0].payload.cve_id
    record = corpus.get(cve_id)
    if record is None:
        raise UnresolvableParent(f"{cve_id} not present in corpus {corpus.source_tag!r}")

    description = _description_sentence(record)
    skeleton = render_context_block(ContextBlock(
        description=description, vulnerable_code="", fixed_code="",
        commit_message=record.commit_message, source_cve_id=cve_id))
    skeleton_tokens = count_tokens(skeleton)
    min_tokens = skeleton_tokens + 2 * count_tokens(TRUNCATION_MARKER)
    if budget < min_tokens:
        raise BudgetTooSmall(
            f"budget {budget} below minimum skeleton size {min_tokens}")

    full = ContextBlock(
        description=description,
        vulnerable_code=record.vulnerable_code,
        fixed_code=record.patched_code,
        commit_message=record.commit_message,
        source_cve_id=cve_id,
    )
    if count_tokens(render_context_block(full)) <= budget:
        return full
    vuln_text, fixed_text = _truncate_symmetric(
        record.vulnerable_code.splitlines(), record.patched_code.splitlines(),
        skeleton_tokens, budget)
    return ContextBlock(
        description=description,
        vulnerable_code=vuln_text,
        fixed_code=fixed_text,
        commit_message=record.commit_message,
        source_cve_id=cve_id,
    )


def render(strategy: Strategy, setting: Setting, sample: Sample,
           context: ContextBlock | list[ContextBlock] | None = None) -> RenderedPrompt:
    """Materialize one prompt; pure function of its inputs."""
    strategy = Strategy(strategy)
    setting = Setting(setting)
    blocks: list[ContextBlock]
    if context is None:
        blocks = []
    elif isinstance(context, ContextBlock):
        blocks = [context]
    else:
        blocks = list(context)

    if setting is Setting.FS and not blocks:
        raise MissingContext("few-shot rendering requires a context block")
    if setting is Setting.ZS and blocks:
        raise UnexpectedContext("zero-shot rendering must not receive context")
    for block in blocks:
        if block.source_cve_id == sample.cve_id:
            raise ValueError(
                f"context source {block.source_cve_id} equals the target CVE")

    if setting is Setting.FS:
        context_text = "\n\n".join(render_context_block(b) for b in blocks)
        system_text = fill(load_template("system_fs.txt"), context=context_text)
        context_ref = blocks[0].source_cve_id
    else:
        system_text = load_template("system_zs.txt")
        context_ref = None

    user_text = fill(load_template(f"user_{strategy.value}.txt"), code=sample.code)
    return RenderedPrompt(
        system_text=system_text,
        user_text=user_text,
        strategy=strategy,
        setting=setting,
        target_sample_ref=(sample.cve_id, sample.kind),
        context_ref=context_ref,
        token_estimate=count_tokens(system_text) + count_tokens(user_text),
    )
