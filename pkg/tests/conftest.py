from __future__ import annotations

import sys
from pathlib import Path

import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from rsverify.core import App, Case, Con, Lam, Let, PCon, Var, WILDCARD  # noqa: E402
from rsverify.core import validate_restricted  # noqa: E402
from rsverify.corpus import load_corpus, read_text  # noqa: E402
from rsverify.syntax import parse_program  # noqa: E402

REPO = Path(__file__).resolve().parent.parent


@pytest.fixture(scope="session")
def corpus():
    return {e.name: e for e in load_corpus()}


@pytest.fixture(scope="session")
def ref1():
    src = parse_program(read_text("example1_distilled.rsl"))
    return src, validate_restricted(src.main)


@pytest.fixture(scope="session")
def ref2():
    src = parse_program(read_text("example2_distilled.rsl"))
    return src, validate_restricted(src.main)


@pytest.fixture(scope="session")
def ref3():
    src = parse_program(read_text("example3_distilled.rsl"))
    return src, validate_restricted(src.main)


# -- random well-scoped-enough expressions over a tiny signature

NAMES = ["x", "y", "z", "w"]
CTORS = [("A", 0), ("B", 0), ("P", 2)]


def exprs(max_leaves: int = 12):
    leaf = st.one_of(st.sampled_from(NAMES).map(Var),
                     st.sampled_from(["A", "B"]).map(lambda c: Con(c, ())))

    def extend(children):
        pat = st.one_of(
            st.just(WILDCARD),
            st.tuples(st.sampled_from(NAMES), st.sampled_from(NAMES))
              .filter(lambda t: t[0] != t[1]).map(lambda t: PCon("P", t)),
        )
        return st.one_of(
            st.builds(lambda x, b: Lam(x, b), st.sampled_from(NAMES), children),
            st.builds(App, children.filter(lambda f: not isinstance(f, Con)), children),
            st.builds(lambda a, b: Con("P", (a, b)), children, children),
            st.builds(lambda x, b, body: Let(x, b, body), st.sampled_from(NAMES),
                      children, children),
            st.builds(lambda s, p1, b1, b2: Case(s, ((PCon("A", ()), b1), (p1, b2))),
                      children, pat, children, children),
        )

    return st.recursive(leaf, extend, max_leaves=max_leaves)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
