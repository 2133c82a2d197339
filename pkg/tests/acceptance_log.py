"""Pass/fail lines for the acceptance criteria, printed at the end of the run."""

RESULTS: dict[int, tuple[bool, str]] = {}


def report(number: int, ok: bool, detail: str) -> None:
    RESULTS[number] = (ok, detail)
