import numpy as np
import pytest

from ot_gt.scaling import ScaledInstance

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_scaled(int_demands, int_supplies, cbar, delta_prime=0.5):
    """ScaledInstance whose floor(2c/delta') reproduces ``cbar`` exactly."""
    cbar = np.asarray(cbar, dtype=np.float64)
    d = np.asarray(int_demands, dtype=np.int64)
    s = np.asarray(int_supplies, dtype=np.int64)
    eps = 0.5
    return ScaledInstance(
        alpha=1.0,
        int_demands=d,
        int_supplies=s,
        total_supply=int(s.sum()),
        delta=delta_prime / (1 - eps),
        epsilon=eps,
        delta_prime=delta_prime,
        costs=cbar * delta_prime / 2.0,
    )


def random_int_instance(rng, n_a, n_b, max_mass, max_cost):
    d = rng.integers(0, max_mass + 1, n_a)
    s = rng.integers(0, max_mass + 1, n_b)
    while s.sum() > d.sum():
        s[s.argmax()] -= 1
    c = rng.integers(0, max_cost + 1, (n_a, n_b))
    return d, s, c
