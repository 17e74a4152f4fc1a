"""Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""

RESULTS: list[str] = []


def record(number: int, title: str, ok: bool, detail: str, elapsed: float, budget: float) -> bool:
    within = elapsed < budget
    passed = ok and within
    line = (f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail} "
            f"[{elapsed:.2f}s / budget {budget:g}s]")
    RESULTS.append(line)
    print(line)
    return passed
