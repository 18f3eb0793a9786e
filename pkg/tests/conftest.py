import pytest

CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.fixture
def detail(request):
    """Collects a short measurement string for the acceptance summary line."""
    parts = []
    request.node.criterion_detail = parts
    return parts.append


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when not in ("setup", "call"):
        return
    number, title = marker.args
    entry = CRITERIA.setdefault(number, {"title": title, "passed": True, "detail": []})
    if rep.failed:
        entry["passed"] = False
    if rep.when == "call":
        entry["detail"].extend(getattr(item, "criterion_detail", []))


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        e = CRITERIA[number]
        status = "PASS" if e["passed"] else "FAIL"
        extra = "; ".join(e["detail"])
        terminalreporter.write_line(f"criterion {number:2d} {status}  {e['title']}" + (f"  [{extra}]" if extra else ""))
