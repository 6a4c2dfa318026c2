import pytest

# criterion number -> list of (test name, passed, detail)
_RESULTS = {}
_DETAILS = {}

CRITERIA = {
    1: "LP schedule ratio meets 1 - K^K/(K! e^K)",
    2: "LP objective bounds the adaptive optimum",
    3: "Poisson min identity and closed form",
    4: "decreasing-price order beats every permutation",
    5: "copy-dependent pricing DP matches exhaustive strategies",
    6: "VersionGAP DP matches brute force",
    7: "schedule search within (1 - eps) of the best schedule",
    8: "adaptive search within (1 - eps) of the adaptive optimum",
    9: "adaptivity gap instance and ratio-table trend",
    10: "Monte Carlo agrees with exact evaluation",
    11: "CLI output is byte-identical across reruns",
}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion this test checks")


@pytest.fixture
def report(request):
    """Attach a one-line summary to the current acceptance test."""
    def note(text):
        _DETAILS[request.node.nodeid] = str(text)
    return note


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        n = marker.args[0]
        _RESULTS.setdefault(n, []).append((item.name, rep.passed, item.nodeid))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(CRITERIA):
        runs = _RESULTS.get(n)
        if not runs:
            continue
        ok = all(passed for _, passed, _ in runs)
        details = "; ".join(_DETAILS[nodeid] for _, _, nodeid in runs if nodeid in _DETAILS)
        line = f"criterion {n:>2} [{'PASS' if ok else 'FAIL'}] {CRITERIA[n]}"
        if details:
            line += f" ({details})"
        tr.write_line(line)
