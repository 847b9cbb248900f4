"""Test configuration: deterministic hypothesis profile and a summary block
listing one pass/fail line per acceptance criterion."""

from hypothesis import HealthCheck, settings

settings.register_profile(
    "deterministic",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("deterministic")

_ACCEPTANCE_RESULTS = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    prev = _ACCEPTANCE_RESULTS.get(name)
    if report.when == "call" or report.failed:
        # a setup/teardown failure overrides a recorded call outcome
        if prev is None or not prev.failed:
            _ACCEPTANCE_RESULTS[name] = report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE_RESULTS):
        rep = _ACCEPTANCE_RESULTS[name]
        if rep.passed:
            status = "PASS"
        elif rep.failed:
            status = "FAIL"
        else:
            status = rep.outcome.upper()
        terminalreporter.write_line(
            f"{status:4s}  {name}  ({rep.duration:.1f}s)")
