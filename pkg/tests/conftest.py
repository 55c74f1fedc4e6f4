import pytest

# criterion number -> (title, list of test outcomes)
_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    entry = _CRITERIA.setdefault(number, (title, []))
    if report.when == "call" or report.failed:
        entry[1].append(report.passed and not report.skipped)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, results = _CRITERIA[number]
        verdict = "PASS" if results and all(results) else "FAIL"
        terminalreporter.write_line(f"{verdict} criterion {number:2d}: {title}")
