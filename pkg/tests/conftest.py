import numpy as np
import pytest

from sca_anneal.model import IsingModel

_CRITERIA: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion():
    """Record one acceptance-criterion outcome, printed in the terminal summary."""

    def record(name: str, ok: bool, detail: str = ""):
        _CRITERIA.append((name, bool(ok), detail))
        print(f"[{'PASS' if ok else 'FAIL'}] {name} {detail}")
        assert ok, f"{name}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _CRITERIA:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")


@pytest.fixture
def ferro2():
    return IsingModel.from_couplings(2, {(0, 1): 1.0})


@pytest.fixture
def antiferro_triangle():
    return IsingModel.from_couplings(3, {(0, 1): -1.0, (1, 2): -1.0, (0, 2): -1.0})


def random_model(n, seed, density=1.0, fields=True, integer=False):
    rng = np.random.default_rng(seed)
    couplings = {}
    for x in range(n):
        for y in range(x + 1, n):
            if rng.random() < density:
                couplings[(x, y)] = float(rng.choice([-1, 1])) if integer else float(rng.standard_normal())
    h = rng.standard_normal(n) if fields else None
    if fields and integer:
        h = rng.integers(-2, 3, n).astype(float)
    return IsingModel.from_couplings(n, couplings, h)


def random_config(n, rng):
    return np.where(rng.random(n) < 0.5, 1, -1)
