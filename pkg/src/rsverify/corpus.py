"""The bundled example systems, their distilled forms and expected verdicts."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib.resources import files

from .ltl import Formula, TruthVal, parse_formula
from .syntax import SourceFile, parse_program

PACKAGE_DIR = files("rsverify") / "corpus"


@dataclass
class PropertyCase:
    name: str
    text: str
    formula: Formula
    expected: TruthVal


@dataclass
class CorpusEntry:
    name: str
    source: SourceFile
    distilled_reference: SourceFile
    properties: list = field(default_factory=list)  # PropertyCase


def read_text(name: str) -> str:
    return (PACKAGE_DIR / name).read_text(encoding="utf-8")


def manifest() -> list:
    """``(example, property, verdict)`` rows of the expected-verdict table."""
    rows = []
    for line in read_text("manifest.txt").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            example, prop, verdict = line.split()
            rows.append((example, prop, TruthVal(verdict)))
    return rows


def load_corpus() -> list:
    entries: dict = {}
    for example, prop, verdict in manifest():
        if example not in entries:
            entries[example] = CorpusEntry(
                example,
                parse_program(read_text(f"{example}.rsl")),
                parse_program(read_text(f"{example}_distilled.rsl")),
            )
        entry = entries[example]
        text = read_text(f"{prop}.ltl")
        phi = parse_formula(text, entry.source.table)
        entry.properties.append(PropertyCase(prop, text, phi, verdict))
    return list(entries.values())

