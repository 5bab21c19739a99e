import numpy as np
import pytest

from rkhs_causal import Dataset

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion."""

    def _report(name: str, ok: bool, detail: str = ""):
        line = f"[{'PASS' if ok else 'FAIL'}] {name}"
        if detail:
            line += f" -- {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_continuous(rng, n=50, dim_x=2, with_v=False):
    d = rng.uniform(0, 1, n)
    x = rng.normal(size=(n, dim_x))
    v = rng.uniform(-0.5, 0.5, n) if with_v else None
    y = np.sin(3 * d) + x[:, 0] * d + 0.1 * rng.normal(size=n)
    if with_v:
        y = y + v * d
    return Dataset(y=y, d=d, x=x, v=v)


def make_discrete(rng, n_d=2, n_x=2, n_v=None, n=120, n_y=None):
    """Random discrete instance in which every (d, [v,] x) cell is populated."""
    while True:
        d = rng.integers(0, n_d, n).astype(float)
        x = rng.integers(0, n_x, n).astype(float)
        v = None if n_v is None else rng.integers(0, n_v, n).astype(float)
        if n_y is None:
            y = d + 2 * x + d * x + rng.normal(size=n)
            if v is not None:
                y = y + v * (1 + d)
        else:
            y = ((d + x + rng.integers(0, 2, n)) % n_y).astype(float)
        keys = np.column_stack([d, x] if v is None else [d, v, x])
        cells = {tuple(r) for r in keys}
        expected = n_d * n_x * (1 if n_v is None else n_v)
        if len(cells) == expected:
            return Dataset(y=y, d=d, x=x, v=v)
