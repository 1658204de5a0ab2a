import pytest

_CRITERIA: dict[int, list[tuple[str, str]]] = {}
_DETAILS: dict[int, list[str]] = {}


@pytest.fixture
def detail(request):
    """Record a measured value shown under the criterion's summary line."""
    mark = request.node.get_closest_marker("criterion")
    n = mark.args[0] if mark else 0

    def add(text: str):
        _DETAILS.setdefault(n, []).append(f"{request.node.name}: {text}")

    return add


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        _CRITERIA.setdefault(mark.args[0], []).append((item.name, rep.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        results = _CRITERIA[n]
        ok = all(o == "passed" for _, o in results)
        failed = [name for name, o in results if o != "passed"]
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}"
        if failed:
            line += "  (failing: " + ", ".join(failed) + ")"
        terminalreporter.write_line(line)
        for d in _DETAILS.get(n, []):
            terminalreporter.write_line(f"    {d}")
