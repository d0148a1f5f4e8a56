"""Benchmark harness for LLM vulnerability detection and reasoning.

Pipeline: CVE fix records -> semantic chunks -> embedded vector store ->
retrieval-augmented prompts -> model gateway -> composite scoring -> reports.
"""

__version__ = "0.1.0"
