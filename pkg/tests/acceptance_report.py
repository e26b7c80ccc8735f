"""Collects one pass/fail line per acceptance criterion for the summary."""

LINES: list[str] = []


def record(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    LINES.append(f"[{status}] {name}{suffix}")
