"""Pass/fail lines collected by the acceptance suite, printed in the terminal summary."""

VERDICTS: list[str] = []


def record(number: int, ok: bool, detail: str) -> str:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    VERDICTS.append(line)
    print(line)
    return line
