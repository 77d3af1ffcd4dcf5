import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dslm.graph import Graph  # noqa: E402

import oracles  # noqa: E402

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def frozen():
    return json.loads((DATA / "oracle_values.json").read_text())


@pytest.fixture
def barbell6():
    src, dst = zip(*oracles.BARBELL6_EDGES)
    return Graph.from_edges(6, np.array(src), np.array(dst))


def random_edge_list(rng, n, p=None, weighted=False, loops=False):
    """Random simple graph as ``(u, v, w)`` triples with ``u <= v``."""
    p = rng.uniform(0.05, 0.5) if p is None else p
    edges = []
    for u in range(n):
        for v in range(u if loops else u + 1, n):
            if rng.random() < (p / 4 if u == v else p):
                edges.append((u, v, float(rng.integers(1, 5)) if weighted else 1.0))
    return edges


def graph_of(n, edges):
    if not edges:
        return Graph.from_edges(n, np.empty(0, np.int64), np.empty(0, np.int64))
    u, v, w = zip(*edges)
    return Graph.from_edges(n, np.array(u), np.array(v), np.array(w, dtype=np.float64))


# -- acceptance summary --------------------------------------------------

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, {"title": title, "status": [], "detail": []})
    if rep.when == "call" or rep.failed or rep.skipped:
        if rep.skipped:
            entry["status"].append("SKIP")
        else:
            entry["status"].append("PASS" if rep.passed else "FAIL")
        detail = getattr(item, "criterion_detail", None)
        if detail and rep.when == "call":
            entry["detail"].append(detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        st = entry["status"]
        if "FAIL" in st:
            verdict = "FAIL"
        elif st and all(s == "SKIP" for s in st):
            verdict = "SKIP"
        else:
            verdict = "PASS"
        detail = "; ".join(entry["detail"])
        line = f"criterion {number} [{verdict}] {entry['title']}"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))
