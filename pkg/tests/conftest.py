import pytest

_ACCEPTANCE = []


@pytest.fixture
def criterion(request):
    """Record a named acceptance criterion; the outcome is printed in the summary."""
    entry = {"name": None, "detail": "", "node": request.node}
    _ACCEPTANCE.append(entry)

    def register(name, detail=""):
        entry["name"] = name
        entry["detail"] = detail

    return register


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item._criterion_passed = rep.passed


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for entry in _ACCEPTANCE:
        if entry["name"] is None:
            continue
        ok = getattr(entry["node"], "_criterion_passed", False)
        line = f"{'PASS' if ok else 'FAIL'}  {entry['name']}"
        if entry["detail"]:
            line += f"  [{entry['detail']}]"
        terminalreporter.write_line(line)
