import pytest

_RESULTS = {}


@pytest.fixture
def acceptance():
    """``acceptance(n, ok, detail)`` records one criterion for the final summary."""

    def record(n: int, ok: bool, detail: str):
        prev = _RESULTS.get(n)
        if prev is not None:
            ok = ok and prev[0]
            detail = f"{prev[1]}; {detail}"
        _RESULTS[n] = (bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        ok, detail = _RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
