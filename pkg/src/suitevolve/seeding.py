"""Deterministic seed derivation."""

import hashlib


def mix(*parts) -> int:
    """A 63-bit seed that is a pure function of ``parts`` (their ``repr``)."""
    digest = hashlib.sha256(repr(parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1
