import contextlib
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from textnorm.decoder import FilterBank  # noqa: E402
from textnorm.grammars import build_number_fst, load_lexicons  # noqa: E402


@pytest.fixture(scope="session")
def numbers():
    return build_number_fst()


@pytest.fixture(scope="session")
def lexicons():
    return load_lexicons()


@pytest.fixture(scope="session")
def bank():
    return FilterBank.default()


def pytest_configure(config):
    config.criteria_lines = []


def pytest_terminal_summary(terminalreporter, config):
    if config.criteria_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(config.criteria_lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


class _Verdict:
    def __init__(self):
        self.details: list[str] = []
        self.ok = True

    def check(self, ok: bool, detail: str) -> None:
        self.ok = self.ok and bool(ok)
        self.details.append(detail)


@pytest.fixture
def criterion(request):
    """``with criterion(n, title) as v: v.check(ok, detail)`` records one PASS/FAIL line."""

    @contextlib.contextmanager
    def run(number: int, title: str):
        v = _Verdict()
        try:
            yield v
        except Exception as exc:
            v.check(False, f"{type(exc).__name__}: {exc}")
            raise
        finally:
            line = (f"{'PASS' if v.ok else 'FAIL'} criterion {number}: {title}"
                    + (f" ({'; '.join(v.details)})" if v.details else ""))
            request.config.criteria_lines.append(line)
            print(line)
        assert v.ok, line

    return run
