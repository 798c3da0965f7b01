import contextlib

import pytest

from decomplab.config import builtin_config
from decomplab.model import CompoundPoissonSpec, Exponential, QueueModel, RiskModel

_CRITERIA = []


@pytest.fixture(scope="session")
def spec_a1():
    return CompoundPoissonSpec(2.0, 1.0, Exponential(1.0))


@pytest.fixture(scope="session")
def spec_a2():
    return CompoundPoissonSpec(3.0, 2.0, Exponential(1.0))


@pytest.fixture(scope="session")
def spec_b1():
    # mu = 0.8 - 2 * 0.5 = -0.2, Phi(0) = 0.5
    return CompoundPoissonSpec(0.8, 2.0, Exponential(2.0))


@pytest.fixture(scope="session")
def risk_a(spec_a1, spec_a2):
    return RiskModel(spec_a1, spec_a2, 2.0, 0.25)


@pytest.fixture(scope="session")
def risk_b(spec_b1, spec_a2):
    return RiskModel(spec_b1, spec_a2, 2.0, 0.25)


@pytest.fixture(scope="session")
def queue_a(spec_a1, spec_a2):
    return QueueModel(spec_a1, spec_a2, 0.5, 0.4)


@pytest.fixture(scope="session")
def cfg_a():
    return builtin_config("cfg_a")


@pytest.fixture(scope="session")
def cfg_b():
    return builtin_config("cfg_b")


class _Criterion:
    def __init__(self, number, title):
        self.number, self.title = number, title
        self.checks = []

    def check(self, ok, detail):
        self.checks.append((bool(ok), detail))


@pytest.fixture
def criterion():
    """Context manager recording one acceptance criterion with its checks."""

    @contextlib.contextmanager
    def run(number, title):
        c = _Criterion(number, title)
        error = None
        try:
            yield c
        except Exception as exc:  # recorded, then re-raised
            error = exc
            raise
        finally:
            ok = error is None and bool(c.checks) and all(k for k, _ in c.checks)
            details = "; ".join(d for _, d in c.checks)
            if error is not None:
                details = f"{details}; error {type(error).__name__}: {error}".lstrip("; ")
            line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'} {title}: {details}"
            _CRITERIA.append((number, line))
            print(line)
        failed = [d for k, d in c.checks if not k]
        assert not failed, "; ".join(failed)

    return run


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for _, line in sorted(_CRITERIA):
        terminalreporter.write_line(line)
