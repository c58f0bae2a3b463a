import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from whitesr.grid import KernelSpec, build_kernel, kernel_to_otf  # noqa: E402
from whitesr.operators import Decimator, build_regularizer  # noqa: E402

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


class Instance:
    """A small random SR problem with everything needed for dense checks."""

    def __init__(self, rng, rows, cols, dr, dc, kernel, reg_kind):
        self.rows, self.cols = rows, cols
        self.dec = Decimator(dr, dc)
        self.kernel = build_kernel(kernel)
        self.otf = kernel_to_otf(self.kernel, rows, cols)
        self.reg = build_regularizer(reg_kind, rows, cols)
        self.reg_kind = reg_kind
        self.b = rng.standard_normal((rows // dr, cols // dc))
        self.v = rng.standard_normal((self.reg.s, rows, cols))


@pytest.fixture
def make_instance():
    def make(seed, rows=8, cols=8, dr=2, dc=2, kernel=None, reg_kind="gradient"):
        kernel = KernelSpec("gaussian", 5, 1.0) if kernel is None else kernel
        return Instance(np.random.default_rng(seed), rows, cols, dr, dc, kernel, reg_kind)

    return make
