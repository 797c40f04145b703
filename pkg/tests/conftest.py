import math

import numpy as np
import pytest

from resforge.params import EnvironmentParams, KerrModelParams, ResonanceParams
from resforge.synth import GeneratorTruth, centered_grid

# 200 nm NbN wire at zero field
RES0_F0 = 4.0743e9
RES0_QI = 13805.0
RES0_QC = 28241.0
RES0_K_HZ = -4.506


@pytest.fixture
def res0():
    return ResonanceParams.from_quality(RES0_F0, RES0_QI, RES0_QC)


@pytest.fixture
def env0():
    return EnvironmentParams(0.8, 0.4, 47e-9, 0.1)


@pytest.fixture
def truth0(res0, env0):
    return GeneratorTruth(res0, env0, KerrModelParams(2 * math.pi * RES0_K_HZ))


@pytest.fixture
def grid0(res0):
    return centered_grid(res0, 10, 401)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = next((m for name, m in list(sys.modules.items())
                   if name.endswith("test_acceptance") and hasattr(m, "RESULTS")), None)
    lines = [module.RESULTS[k] for k in sorted(module.RESULTS)] if module else []
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
