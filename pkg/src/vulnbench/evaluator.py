"""Turn raw model responses into verdicts and composite scores.

Scoring combines binary accuracy (acc), clamped reasoning cosine similarity
(cs), and a partial correctness score (pcs) into

    sm = min(1.0, w1*acc + w2*cs + w3*pcs),   w = (0.6, 0.3, 0.1)

capped at 1.0. Outcomes classify as CP_CR (correct prediction, correct
reason), CP_ICR, or ICP_ICR; an incorrect prediction always lands in
ICP_ICR, and unparseable predictions (n_a) score acc=0.

Verdict extraction and alignment run either through a judge model (pinned,
versioned prompts; identity and prompt hash recorded in every Evaluation)
or through deterministic fallbacks: a format-contract parser, a cosine
threshold for alignment, and a CWE/location/mechanism rubric for pcs.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass

from .corpus import CveRecord, FlawLocation
from .embedder import cosine, count_tokens
from .errors import JudgeUnavailable, RangeViolation, VulnBenchError
from .llm_gateway import Gateway, ModelProfile, RawResponse
from .promptkit import RenderedPrompt, Setting, Strategy, load_template, fill

PRED_YES = "yes"
PRED_NO = "no"
PRED_NA = "n_a"

OUTCOME_CP_CR = "CP_CR"
OUTCOME_CP_ICR = "CP_ICR"
OUTCOME_ICP_ICR = "ICP_ICR"
OUTCOMES = (OUTCOME_CP_CR, OUTCOME_CP_ICR, OUTCOME_ICP_ICR)

DEFAULT_ALIGNMENT_THRESHOLD = 0.75

_PREDICTION_RE = re.compile(r"prediction\s*[:\-]\s*\**\s*\[?\s*(yes|no)\b", re.I)
_REASON_LINE_RE = re.compile(r"^\s*\**\s*reason\s*\**\s*[:\-]\s*(.*)$", re.I)
_OTHER_LABEL_RE = re.compile(r"^\s*\**\s*(prediction|step\s*\d|question|code)\s*\**\s*[:\-]", re.I)
_CWE_RE = re.compile(r"CWE-\d+", re.I)
_CWE_PAREN_RE = re.compile(r"\s*\(\s*CWE-\d+[^)]*\)", re.I)
_LOCATION_RE = re.compile(r"lines?\s*[#:]?\s*\d+(?:\s*(?:-|to)\s*\d+)?", re.I)
_NUMBER_RE = re.compile(r"\d+")

_CWE_FAMILIES = {
    # Close sibling/child CWE ids accepted as a family match.
    "CWE-787": {"CWE-787", "CWE-119", "CWE-121", "CWE-122", "CWE-124", "CWE-786", "CWE-788"},
    "CWE-476": {"CWE-476"},
    "CWE-190": {"CWE-190", "CWE-191", "CWE-680"},
    "CWE-416": {"CWE-416", "CWE-825"},
}

_MECHANISM_KEYWORDS = {
    "CWE-787": ("out-of-bounds", "out of bounds", "buffer overflow", "past the end",
                "write beyond", "bounds check", "oob write", "stack buffer"),
    "CWE-476": ("null pointer", "null dereference", "nullptr", "dereferenced without",
                "null check", "dereference null", "may be null"),
    "CWE-190": ("integer overflow", "wrap around", "wraparound", "wraps", "overflow the",
                "arithmetic overflow", "multiplication overflow", "can wrap"),
    "CWE-416": ("use after free", "use-after-free", "dangling", "freed memory",
                "after it is freed", "released and then"),
}


@dataclass(frozen=True)
class Verdict:
    prediction: str  # yes | no | n_a
    reason_summary: str
    claimed_cwe: str | None = None
    claimed_location: str | None = None


@dataclass(frozen=True)
class ScoringWeights:
    w1: float = 0.6  # accuracy
    w2: float = 0.3  # cosine similarity
    w3: float = 0.1  # partial correctness

    def __post_init__(self):
        if min(self.w1, self.w2, self.w3) < 0:
            raise ValueError("weights must be >= 0")
        if abs(self.w1 + self.w2 + self.w3 - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1.0")


@dataclass(frozen=True)
class Evaluation:
    acc: int
    cs: float
    pcs: float
    aligned: bool
    sm: float
    outcome: str
    judge_name: str = "fallback"
    judge_prompt_hash: str = ""


def _extract_reason(text: str) -> str:
    """Reason text following the "Reason:" label, up to the next label line."""
    lines = text.splitlines()
    for i, line in enumerate(lines):
        match = _REASON_LINE_RE.match(line)
        if match is None:
            continue
        collected = [match.group(1)]
        for follow in lines[i + 1:]:
            if not follow.strip() or _OTHER_LABEL_RE.match(follow):
                break
            collected.append(follow)
        return " ".join(" ".join(collected).split())
    return ""


def _clean_reason(reason: str) -> str:
    return " ".join(_CWE_PAREN_RE.sub("", reason).split())


def extract_verdict(raw: RawResponse) -> Verdict:
    """Deterministic fallback parser for the Prediction/Reason format contract.

    Case-insensitive; unparseable responses map to prediction n_a with an
    empty summary. A parenthetical CWE tag is lifted out of the reason into
    claimed_cwe.
    """
    text = raw.text or ""
    pred_match = _PREDICTION_RE.search(text)
    cwe_match = _CWE_RE.search(text)
    claimed_cwe = cwe_match.group(0).upper() if cwe_match else None
    loc_match = _LOCATION_RE.search(text)
    claimed_location = loc_match.group(0) if loc_match else None
    if pred_match is None:
        return Verdict(prediction=PRED_NA, reason_summary="",
                       claimed_cwe=claimed_cwe, claimed_location=claimed_location)
    return Verdict(
        prediction=pred_match.group(1).lower(),
        reason_summary=_clean_reason(_extract_reason(text)),
        claimed_cwe=claimed_cwe,
        claimed_location=claimed_location,
    )


def _judge_prompt(user_text: str) -> RenderedPrompt:
    system_text = "You are a careful evaluation assistant. Follow the instructions exactly."
    return RenderedPrompt(
        system_text=system_text,
        user_text=user_text,
        strategy=Strategy.STANDARD,
        setting=Setting.ZS,
        target_sample_ref=("judge", "judge"),
        context_ref=None,
        token_estimate=count_tokens(system_text) + count_tokens(user_text),
    )


def _ask_judge(judge: ModelProfile, gateway: Gateway, user_text: str) -> str:
    try:
        return gateway.complete(judge, _judge_prompt(user_text)).text
    except VulnBenchError as exc:
        raise JudgeUnavailable(f"judge {judge.name} failed: {exc}") from exc


def _first_json_object(text: str) -> dict | None:
    start = text.find("{")
    end = text.rfind("}")
    if start == -1 or end <= start:
        return None
    try:
        parsed = json.loads(text[start:end + 1])
    except json.JSONDecodeError:
        return None
    return parsed if isinstance(parsed, dict) else None


def _render_locations(locations: tuple[FlawLocation, ...]) -> str:
    if not locations:
        return "unknown"
    return ", ".join(f"{f.start_line}-{f.end_line}" for f in locations)


def judge_prompt_hash(template_name: str = "judge_extract.txt") -> str:
    return hashlib.sha256(load_template(template_name).encode("utf-8")).hexdigest()


def extract_with_judge(raw: RawResponse, record: CveRecord, gt_reason: str,
                       judge: ModelProfile, gateway: Gateway
                       ) -> tuple[Verdict, bool, float]:
    """Single judge call returning (verdict, aligned, pcs); the reply must be
    one JSON object, parsed leniently for wrapping prose."""
    user_text = fill(
        load_template("judge_extract.txt"),
        gt_reason=gt_reason,
        cwe_id=record.cwe_id,
        flaw_locations=_render_locations(record.flaw_locations),
        response=raw.text or "",
    )
    reply = _ask_judge(judge, gateway, user_text)
    obj = _first_json_object(reply)
    if obj is None:
        raise JudgeUnavailable(f"judge {judge.name} reply was not a JSON object")
    prediction = str(obj.get("prediction", PRED_NA)).lower()
    if prediction not in (PRED_YES, PRED_NO, PRED_NA, "na", "n/a"):
        raise JudgeUnavailable(f"judge returned prediction {prediction!r}")
    if prediction in ("na", "n/a"):
        prediction = PRED_NA
    try:
        pcs = float(obj.get("pcs", 0.0))
    except (TypeError, ValueError):
        raise JudgeUnavailable("judge pcs was not a number") from None
    if not 0.0 <= pcs <= 1.0:
        raise JudgeUnavailable(f"judge pcs {pcs} outside [0, 1]")
    verdict = Verdict(
        prediction=prediction,
        reason_summary=str(obj.get("reason_summary") or ""),
        claimed_cwe=(str(obj["cwe"]).upper() if obj.get("cwe") else None),
        claimed_location=(str(obj["location"]) if obj.get("location") else None),
    )
    return verdict, bool(obj.get("aligned", False)), pcs


def accuracy(verdict: Verdict, ground_truth: str) -> int:
    """1 iff the prediction equals the ground truth; n_a scores 0."""
    if verdict.prediction == PRED_NA:
        return 0
    return int(verdict.prediction == ground_truth)


def reasoning_similarity(reason: str, gt_reason: str, embedder) -> float:
    """Clamped cosine between reason embeddings; an empty reason scores 0."""
    if not gt_reason or not gt_reason.strip():
        raise ValueError("gt_reason must be non-empty")
    if not reason or not reason.strip():
        return 0.0
    return max(0.0, cosine(embedder.embed(reason), embedder.embed(gt_reason)))


def semantic_alignment(reason: str, gt_reason: str, *,
                       judge: ModelProfile | None = None,
                       gateway: Gateway | None = None,
                       embedder=None,
                       threshold: float = DEFAULT_ALIGNMENT_THRESHOLD) -> bool:
    """Judge yes/no when a judge is given, else cosine-threshold fallback."""
    if judge is not None:
        if gateway is None:
            raise ValueError("a gateway is required for the judge path")
        user_text = fill(load_template("judge_align.txt"),
                         gt_reason=gt_reason, reason=reason)
        reply = _ask_judge(judge, gateway, user_text).strip().lower()
        first = reply.split()[0].strip(".,!:") if reply.split() else ""
        if first in ("yes", "aligned", "true"):
            return True
        if first in ("no", "false"):
            return False
        raise JudgeUnavailable(f"judge alignment reply {reply[:80]!r} unparseable")
    if embedder is None:
        raise ValueError("the fallback path requires an embedder")
    return reasoning_similarity(reason, gt_reason, embedder) >= threshold


def _cwe_family_match(claimed: str | None, actual: str) -> bool:
    if not claimed:
        return False
    claimed = claimed.upper()
    if claimed == actual:
        return True
    return claimed in _CWE_FAMILIES.get(actual, ())


def _location_overlap(claimed: str | None,
                      locations: tuple[FlawLocation, ...]) -> bool:
    if not claimed:
        return False
    numbers = [int(n) for n in _NUMBER_RE.findall(claimed)]
    if not numbers:
        return False
    lo, hi = min(numbers), max(numbers)
    return any(loc.overlaps(lo, hi) for loc in locations)


def _mechanism_match(reason: str, cwe_id: str) -> bool:
    lowered = reason.lower()
    return any(kw in lowered for kw in _MECHANISM_KEYWORDS.get(cwe_id, ()))


def partial_credit(verdict: Verdict, record: CveRecord, *,
                   judge: ModelProfile | None = None,
                   gateway: Gateway | None = None,
                   raw: RawResponse | None = None) -> float:
    """Partial correctness in [0, 1].

    Judge path grades against the pinned rubric prompt. Fallback rubric:
    0.4 for a CWE family match, 0.3 for location overlap, 0.3 for mechanism
    keywords; without ground-truth locations the location term drops and
    the rest renormalizes.
    """
    if judge is not None:
        if gateway is None:
            raise ValueError("a gateway is required for the judge path")
        user_text = fill(
            load_template("judge_pcs.txt"),
            cwe_id=record.cwe_id,
            flaw_locations=_render_locations(record.flaw_locations),
            gt_reason=record.description,
            response=(raw.text if raw is not None else verdict.reason_summary),
        )
        reply = _ask_judge(judge, gateway, user_text)
        match = re.search(r"\d*\.?\d+", reply)
        if match is None:
            raise JudgeUnavailable(f"judge pcs reply {reply[:80]!r} unparseable")
        value = float(match.group(0))
        if not 0.0 <= value <= 1.0:
            raise JudgeUnavailable(f"judge pcs {value} outside [0, 1]")
        return value

    cwe_ok = _cwe_family_match(verdict.claimed_cwe, record.cwe_id)
    mech_ok = _mechanism_match(verdict.reason_summary, record.cwe_id)
    if record.flaw_locations:
        loc_ok = _location_overlap(verdict.claimed_location, record.flaw_locations)
        return 0.4 * cwe_ok + 0.3 * loc_ok + 0.3 * mech_ok
    return (0.4 * cwe_ok + 0.3 * mech_ok) / 0.7


def score(acc: int, cs: float, pcs: float,
          weights: ScoringWeights = ScoringWeights()) -> float:
    """Composite metric, capped at 1.0.

    fsum keeps the weighted sum exactly on the cap for perfect inputs
    instead of stopping one ulp short of it.
    """
    if acc not in (0, 1):
        raise RangeViolation(f"acc must be 0 or 1, got {acc!r}")
    if not 0.0 <= cs <= 1.0:
        raise RangeViolation(f"cs must be in [0, 1], got {cs!r}")
    if not 0.0 <= pcs <= 1.0:
        raise RangeViolation(f"pcs must be in [0, 1], got {pcs!r}")
    return min(1.0, math.fsum((weights.w1 * acc, weights.w2 * cs, weights.w3 * pcs)))


def classify(acc: int, aligned: bool) -> str:
    """Three-way outcome; an incorrect prediction is always ICP_ICR."""
    if acc == 1:
        return OUTCOME_CP_CR if aligned else OUTCOME_CP_ICR
    return OUTCOME_ICP_ICR


def evaluate_response(raw: RawResponse, sample, record: CveRecord, embedder,
                      weights: ScoringWeights = ScoringWeights(), *,
                      judge: ModelProfile | None = None,
                      gateway: Gateway | None = None,
                      alignment_threshold: float = DEFAULT_ALIGNMENT_THRESHOLD
                      ) -> tuple[Verdict, Evaluation]:
    """Full per-response evaluation: extraction, acc, cs, alignment, pcs, sm."""
    if judge is not None:
        if gateway is None:
            raise ValueError("a gateway is required for the judge path")
        verdict, aligned, pcs = extract_with_judge(
            raw, record, sample.gt_reason, judge, gateway)
        judge_name = judge.name
        prompt_hash = judge_prompt_hash()
    else:
        verdict = extract_verdict(raw)
        pcs = partial_credit(verdict, record)
        judge_name = "fallback"
        prompt_hash = ""
    acc = accuracy(verdict, sample.ground_truth)
    cs = reasoning_similarity(verdict.reason_summary, sample.gt_reason, embedder)
    if judge is None:
        aligned = cs >= alignment_threshold
    sm = score(acc, cs, pcs, weights)
    return verdict, Evaluation(
        acc=acc, cs=cs, pcs=pcs, aligned=aligned, sm=sm,
        outcome=classify(acc, aligned),
        judge_name=judge_name, judge_prompt_hash=prompt_hash,
    )
