import time

import pytest

_LINES = pytest.StashKey[list]()


class Criterion:
    """Context manager timing one acceptance criterion and recording its verdict."""

    def __init__(self, lines, number, title, limit=None):
        self.lines, self.number, self.title, self.limit = lines, number, title, limit
        self.notes = []

    def note(self, text):
        self.notes.append(text)

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        slow = self.limit is not None and elapsed > self.limit
        ok = exc_type is None and not slow
        budget = f" / limit {self.limit:g}s" if self.limit is not None else ""
        detail = "; ".join(self.notes)
        if exc_type is not None:
            detail = (detail + "; " if detail else "") + f"{exc_type.__name__}: {exc}".splitlines()[0]
        elif slow:
            detail = (detail + "; " if detail else "") + "runtime over limit"
        self.lines.append(f"{'PASS' if ok else 'FAIL'}  criterion {self.number:>2}: {self.title} "
                          f"({elapsed:.1f}s{budget})" + (f"  [{detail}]" if detail else ""))
        if exc_type is None and slow:
            raise AssertionError(f"criterion {self.number} took {elapsed:.1f}s, "
                                 f"limit {self.limit}s")
        return False


@pytest.fixture
def criterion(request):
    lines = request.config.stash.setdefault(_LINES, [])
    return lambda number, title, limit=None: Criterion(lines, number, title, limit)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
