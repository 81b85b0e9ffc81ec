import pytest

from gwtail.envelope import SlowVaryFactor, TailEnvelope


@pytest.fixture
def exp1_env():
    return TailEnvelope()


@pytest.fixture
def log_sq_factor():
    # Q(t) = ln(e + t)^2
    return SlowVaryFactor(a=2.0)


ACCEPTANCE_LINES = []


def record(criterion, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion:>2}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
