"""Exception types shared across the pipeline modules."""

from __future__ import annotations


class VulnBenchError(Exception):
    """Base class for all errors raised by this package."""


# --- corpus -----------------------------------------------------------------

class MalformedRecord(VulnBenchError):
    """A record line failed validation; carries line number and field name."""

    def __init__(self, line_no: int, field: str, detail: str):
        super().__init__(f"line {line_no}: field '{field}': {detail}")
        self.line_no = line_no
        self.field = field
        self.detail = detail


class DuplicateCve(VulnBenchError):
    """The same cve_id appeared more than once in a manifest."""


class EmptyManifest(VulnBenchError):
    """A manifest source contained no records."""


class UnsupportedVersion(VulnBenchError):
    """A record file declared a format version this build cannot read."""


# --- embedder ---------------------------------------------------------------

class EmptyInput(VulnBenchError):
    """Text to embed was empty or whitespace-only."""


class TokenBudgetExceeded(VulnBenchError):
    """Text exceeds the embedder profile's token budget; chunk it first."""


class ProviderError(VulnBenchError):
    """A live provider call failed after retries; carries status and body."""

    def __init__(self, message: str, status: int | None = None, body: str = ""):
        super().__init__(message)
        self.status = status
        self.body = body


class DimensionMismatch(VulnBenchError):
    """Vector dimensions disagree with each other or with the store."""


class ZeroVector(VulnBenchError):
    """Cosine similarity is undefined for a zero vector."""


# --- chunker ----------------------------------------------------------------

class EmptyDocument(VulnBenchError):
    """Document to split or chunk was empty or whitespace-only."""


# --- vectorstore ------------------------------------------------------------

class CorruptIndex(VulnBenchError):
    """Index file failed its magic or checksum check."""


class VersionMismatch(VulnBenchError):
    """Index file was written by an unsupported format version."""


# --- promptkit --------------------------------------------------------------

class UnresolvableParent(VulnBenchError):
    """A search hit's parent CVE record is not present in the corpus."""


class BudgetTooSmall(VulnBenchError):
    """Context token budget is below the minimum template skeleton size."""


class MissingContext(VulnBenchError):
    """Few-shot rendering requires a context block."""


class UnexpectedContext(VulnBenchError):
    """Zero-shot rendering must not receive a context block."""


# --- llm_gateway ------------------------------------------------------------

class ContextOverflow(VulnBenchError):
    """Prompt plus output budget exceeds the model's context window."""


class ReplayMiss(VulnBenchError):
    """Replay fixture has no entry for the request hash."""

    def __init__(self, request_hash: str):
        super().__init__(f"no replay entry for request hash {request_hash}")
        self.request_hash = request_hash


# --- evaluator --------------------------------------------------------------

class JudgeUnavailable(VulnBenchError):
    """The judge model could not be reached or gave an unusable reply."""


class RangeViolation(VulnBenchError):
    """A scoring input was outside its declared range."""


# --- harness ----------------------------------------------------------------

class EmptyAxis(VulnBenchError):
    """A run-matrix axis (models, strategies, settings, samples) is empty."""


class NoContextAvailable(VulnBenchError):
    """Retrieval after the leakage filter returned no usable context."""


# --- report -----------------------------------------------------------------

class EmptyLog(VulnBenchError):
    """Result log contains no evaluated entries."""


class LogParseError(VulnBenchError):
    """A result log line is not valid; carries the offending line number."""

    def __init__(self, line_no: int, detail: str):
        super().__init__(f"log line {line_no}: {detail}")
        self.line_no = line_no
        self.detail = detail
