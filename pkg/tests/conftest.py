import re

_criteria: dict[str, str] = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_criterion_(\d+)_(\w+?)(\[.*\])?$", report.nodeid)
    if not m or (report.when != "call" and report.outcome != "failed"):
        return
    key = f"{int(m.group(1)):>2} {m.group(2)}"
    ok = report.outcome == "passed"
    if _criteria.get(key) != "FAIL":
        _criteria[key] = "PASS" if ok else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_criteria):
        terminalreporter.write_line(f"{_criteria[key]}  criterion {key}")
