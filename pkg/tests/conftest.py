from __future__ import annotations

import pytest

SNIPPET = '''def foo(a, b, c=0):
  if a in b:
    c += bar(b, c)
  c_is_neg = c < 0
  if c_is_neg or a is int:
    return True, c
  return c > 1, c
'''

# numbered locations of the snippet, in source order
L = {
    1: (5, 1, 1, 1), 2: (5, 1, 1, 2), 3: (5, 1, 1, 3), 4: (5, 1, 2, 1, 1), 5: (5, 1, 2, 1, 2),
    6: (5, 1, 2, 1, 3), 7: (5, 1, 2, 1, 3, 2), 8: (5, 1, 2, 1, 3, 3), 9: (5, 2, 2), 10: (5, 2, 3, 1),
    11: (5, 2, 3, 2), 12: (5, 2, 3, 3), 13: (5, 3, 1, 1), 14: (5, 3, 1, 2), 15: (5, 3, 1, 3, 1),
    16: (5, 3, 1, 3, 2), 17: (5, 3, 2, 1, 1), 18: (5, 3, 2, 1, 2), 19: (5, 4, 1, 1), 20: (5, 4, 1, 2),
    21: (5, 4, 1, 3), 22: (5, 4, 2),
}

# Candidate listing of the reference snippet, by numbered location. The
# argument swap at 6 is written as its payload, negation at 13 as "not".
LISTING = {
    1: {"b", "c"}, 2: {"not in"}, 3: {"a", "c"}, 4: {"a", "b"},
    5: {"=", "-=", "*=", "/=", "//=", "%="}, 6: {"1,2"}, 7: {"a", "c"}, 8: {"a", "b"},
    9: {"+=", "-=", "*=", "/=", "//=", "%="}, 10: {"a", "b"}, 11: {"<=", ">", ">=", "==", "!="},
    12: {"-2", "-1", "1", "2"}, 13: {"a", "b", "c", "not"}, 14: {"and"}, 15: {"b", "c", "c_is_neg"},
    16: {"is not"}, 17: {"False"}, 18: {"a", "b", "c_is_neg"}, 19: {"a", "b", "c_is_neg"},
    20: {">=", "<", "<=", "==", "!="}, 21: {"-2", "-1", "0", "2"}, 22: {"a", "b", "c_is_neg"},
}


@pytest.fixture
def snippet_fn():
    from bugdetect.lang import parse_function

    return parse_function(SNIPPET)


# -- acceptance reporting -----------------------------------------------------

_ACCEPTANCE: list[tuple[str, str, str]] = []


class AcceptanceLog:
    def record(self, name: str, ok: bool, detail: str, soft: bool = False) -> None:
        status = "PASS" if ok else ("WARN" if soft else "FAIL")
        _ACCEPTANCE.append((name, status, detail))
        print(f"ACCEPTANCE {status}: {name}: {detail}")


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{status}  {name}: {detail}")


# -- desk-scale training run, shared by the acceptance and scan tests ---------

@pytest.fixture(scope="session")
def desk_run(tmp_path_factory):
    import time

    from bugdetect.train import desk_corpus, desk_train_config, run

    t0 = time.perf_counter()
    corpus = desk_corpus(500, seed=0)
    out = tmp_path_factory.mktemp("desk")
    result = run(corpus.train, desk_train_config(seed=0), holdout=corpus.holdout_graphs, out_dir=str(out))
    return corpus, result, time.perf_counter() - t0
