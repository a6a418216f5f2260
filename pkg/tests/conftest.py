import pytest

_AC_RESULTS: dict[str, list[tuple[str, str]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(id): exit criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = getattr(item, "ac_detail", "")
        _AC_RESULTS.setdefault(marker.args[0], []).append((report.outcome, detail))


def pytest_terminal_summary(terminalreporter):
    if not _AC_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for ac in sorted(_AC_RESULTS, key=lambda s: int(s.split("-")[1])):
        results = _AC_RESULTS[ac]
        ok = all(outcome == "passed" for outcome, _ in results)
        details = "; ".join(d for _, d in results if d)
        terminalreporter.write_line(f"{ac}: {'PASS' if ok else 'FAIL'}  {details}")


@pytest.fixture
def ac_detail(request):
    def record(text: str) -> None:
        prev = getattr(request.node, "ac_detail", "")
        request.node.ac_detail = f"{prev}, {text}" if prev else text

    return record
