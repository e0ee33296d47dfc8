import pytest

_LINES: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion():
    """Record one acceptance outcome; the line is echoed in the terminal summary."""

    def record(label: str, ok: bool, detail: str = "") -> bool:
        _LINES.append((label, bool(ok), detail))
        print(f"{'PASS' if ok else 'FAIL'} {label}: {detail}")
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in _LINES:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {label}: {detail}")
