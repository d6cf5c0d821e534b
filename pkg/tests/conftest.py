import pytest


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is not None and rep.when == "call":
        rep.user_properties.append(("criterion", mark.args[0]))
        rep.user_properties.append(("title", mark.args[1]))


def pytest_terminal_summary(terminalreporter):
    """One line per acceptance criterion, in criterion order."""
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            props = dict(getattr(rep, "user_properties", ()))
            if rep.when != "call" or "criterion" not in props:
                continue
            status = "PASS" if outcome == "passed" else "FAIL"
            detail = props.get("detail", "did not complete")
            lines.append((props["criterion"], f"[{status}] {props['criterion']}. {props['title']}: {detail}"))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(lines):
        terminalreporter.write_line(line)
