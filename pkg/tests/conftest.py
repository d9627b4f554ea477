import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

_RESULTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_RESULTS] = {}


@pytest.fixture
def criterion(request):
    """Record ``(criterion, part, ok, detail)`` for the acceptance summary."""
    results = request.config.stash[_RESULTS]

    def record(number: int, part: str, ok: bool, detail: str = "") -> bool:
        results.setdefault(number, []).append((part, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_RESULTS, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        parts = results[number]
        status = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number}")
        for part, ok, detail in parts:
            mark = "ok  " if ok else "FAIL"
            terminalreporter.write_line(f"    {mark} {part}: {detail}")
