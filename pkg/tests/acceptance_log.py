"""Collects one PASS/FAIL line per acceptance criterion for the session summary."""

LINES: list[str] = []


def record(criterion: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} [{criterion}] {detail}"
    LINES.append(line)
    print(line)
