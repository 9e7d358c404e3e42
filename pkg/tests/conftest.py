from hypothesis import settings

# the closed forms are cheap but the oracle-backed properties are not; timing is not under test
settings.register_profile("repo", deadline=None)
settings.load_profile("repo")


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number].line())
