import pytest

from lnterm import build_flat_curve, build_tenor, solve

# canonical desk-scale setup used throughout: flat 5% short rate, quarterly
# steps over ten years, Libor set at 7.5y
R0 = 0.05
N = 40
TAU = 0.25
HORIZON = 30


@pytest.fixture(scope="session")
def tenor():
    return build_tenor(N, TAU)


@pytest.fixture(scope="session")
def curve(tenor):
    return build_flat_curve(R0, tenor)


@pytest.fixture(scope="session")
def solve_cached(curve):
    cache = {}

    def _solve(psi, bits=256):
        key = (psi, bits)
        if key not in cache:
            cache[key] = solve(curve, psi, precision_bits=bits)
        return cache[key]

    return _solve
