"""Bundled MiniLang programs with reference suites and an oracle manifest."""

import json
from importlib import resources

NAMES = ("triangle", "leapyear", "gcd", "strscan", "clamp", "bucket", "basics")


def path(name: str, suite: bool = False) -> str:
    """Filesystem path of a fixture program (or its bundled suite)."""
    ext = ".test.mini" if suite else ".mini"
    return str(resources.files(__name__) / f"{name}{ext}")


def read(name: str, suite: bool = False) -> str:
    with open(path(name, suite), encoding="utf-8") as fh:
        return fh.read()


def manifest() -> dict:
    """Oracle-computed totals per fixture, frozen at build time."""
    with open(str(resources.files(__name__) / "manifest.json"), encoding="utf-8") as fh:
        return json.load(fh)
