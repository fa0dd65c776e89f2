"""Hybrid LLM + genetic-algorithm test-suite generation over MiniLang programs."""

__version__ = "0.1.0"
