import numpy as np
import pytest

from specopt.problems import InstanceSpec, generate_instance


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def table_instances():
    """20 seeded Elastic Net instances for each table shape."""
    shapes = {"t51": (50, 100, 0.01, 1.0), "t52": (500, 100, 100.0, 1.0),
              "t53": (500, 100, 0.0, 0.0)}
    return {key: [generate_instance(InstanceSpec(m, n, l1, l2, seed=7, trial_index=t))
                  for t in range(20)]
            for key, (m, n, l1, l2) in shapes.items()}


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_report(request):
    """Collects one ``PASS``/``FAIL`` line per acceptance criterion."""
    return request.config.stash.setdefault(_ACCEPTANCE_KEY, [])


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
