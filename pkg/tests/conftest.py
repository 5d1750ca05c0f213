import pytest

ACCEPTANCE_FILE = "test_acceptance.py"


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """One visible PASS/FAIL line per acceptance criterion."""
    outcome = yield
    report = outcome.get_result()
    if report.when != "call" or ACCEPTANCE_FILE not in str(item.fspath):
        return
    status = "PASS" if report.passed else "FAIL"
    reporter = item.config.pluginmanager.get_plugin("terminalreporter")
    if reporter is not None:
        reporter.write_line(f"[ACCEPTANCE {status}] {item.name}")
