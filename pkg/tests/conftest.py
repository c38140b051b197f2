import numpy as np
import pytest

from qrdyn.maps import build_map


@pytest.fixture(scope="session")
def exp02():
    return build_map("exp", **{"lambda": 0.2})


@pytest.fixture(scope="session")
def exp1():
    return build_map("exp", **{"lambda": 1.0})


@pytest.fixture(scope="session")
def fatou50():
    return build_map("fatou-mod", M=50.0)


@pytest.fixture(scope="session")
def annulus005():
    return build_map("annulus-fixed", delta=0.05)


@pytest.fixture(scope="session")
def zorich10():
    return build_map("zorich", a=10.0, M=2.0)


@pytest.fixture(scope="session")
def exp_fixed_points():
    """Independent oracle: the two real roots of 0.2 e^x = x by bisection."""

    def bisect(lo, hi):
        f = lambda x: 0.2 * np.exp(x) - x
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if f(lo) * f(mid) <= 0:
                hi = mid
            else:
                lo = mid
        return 0.5 * (lo + hi)

    return bisect(0.0, 1.0), bisect(2.0, 3.0)


@pytest.fixture(scope="session")
def zorich_fixed_point(zorich10):
    """The attracting fixed point by plain forward iteration from (0,0,-a)."""
    xi = np.array([0.0, 0.0, -10.0])
    for _ in range(80):
        xi = zorich10(xi)
    return xi
