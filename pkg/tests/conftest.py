import numpy as np
import pytest

from spopo import OscillatorParams


@pytest.fixture
def params():
    # kappa_s T_R = 0.01, kappa_p = 100 kappa_s, T_R = 1 s
    return OscillatorParams(1.0, 0.01, 1.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is not None and module.RESULTS:
        RESULTS = module.RESULTS
        terminalreporter.section("acceptance criteria")
        for key in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[key])
