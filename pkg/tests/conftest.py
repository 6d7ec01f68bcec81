import sys
import warnings
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ncvem.forms import CoefficientField  # noqa: E402
from ncvem.meshgen import builtin_mesh  # noqa: E402
from ncvem.poly import Poly2  # noqa: E402

ACCEPTANCE_LINES = []

PI = np.pi


def u_exact(x, y):
    return np.sin(PI * x) * np.sin(PI * y)


def ux_exact(x, y):
    return PI * np.cos(PI * x) * np.sin(PI * y)


def uy_exact(x, y):
    return PI * np.sin(PI * x) * np.cos(PI * y)


def f_cdr(x, y):
    """Load for K = I, beta = (1, 1), c = 1 and u = sin(pi x) sin(pi y)."""
    return 2 * PI ** 2 * u_exact(x, y) + ux_exact(x, y) + uy_exact(x, y) + u_exact(x, y)


def variable_coefficients() -> CoefficientField:
    X, Y = Poly2.x(), Poly2.y()
    return CoefficientField(1 + X * X, Poly2(), 1 + Y * Y, X, Y, 1 + X)


@pytest.fixture(scope="session")
def meshes():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return {fam: builtin_mesh(fam, 4) for fam in ("quad", "distorted-quad", "polygonal-dual", "tri")}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
