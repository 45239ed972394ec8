from __future__ import annotations

import pytest

from rsverify.core import validate_restricted
from rsverify.ltl import FairnessSet, TruthVal
from rsverify.transformer import bounded_bisim
from rsverify.verifier import verify_program

T, F = TruthVal.TRUE, TruthVal.FALSE


def test_entries(corpus):
    assert sorted(corpus) == ["example1", "example2", "example3"]
    expected = {
        "example1": [("mutex", F)],
        "example2": [("mutex", T), ("nonstarve1", F)],
        "example3": [("mutex", T), ("nonstarve1", T), ("nonstarve2", T)],
    }
    for name, props in expected.items():
        assert [(c.name, c.expected) for c in corpus[name].properties] == props


@pytest.mark.parametrize("name", ["example1", "example2", "example3"])
def test_reference_is_restricted(corpus, name):
    validate_restricted(corpus[name].distilled_reference.main)


@pytest.mark.parametrize("name", ["example1", "example2", "example3"])
def test_reference_verdicts(corpus, name):
    entry = corpus[name]
    p = validate_restricted(entry.distilled_reference.main)
    fair = FairnessSet.all_of(entry.source.table)
    for case in entry.properties:
        assert verify_program(p, case.formula, fair).verdict is case.expected


@pytest.mark.parametrize("name", ["example1", "example2", "example3"])
def test_reference_bisimilar_to_source(corpus, name):
    entry = corpus[name]
    p = validate_restricted(entry.distilled_reference.main)
    r = bounded_bisim(entry.source, p, depth=20, trials=200, seed=0)
    assert r.ok, f"diverges at position {r.position} on {r.counterexample}"
