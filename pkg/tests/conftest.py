"""Collects acceptance verdicts and prints them at the end of the run."""

VERDICTS: dict[int, tuple[bool, str]] = {}


def verdict_line(k: int, ok: bool, detail: str) -> str:
    return f"C{k} {'PASS' if ok else 'FAIL'}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(VERDICTS):
        terminalreporter.write_line(verdict_line(k, *VERDICTS[k]))
