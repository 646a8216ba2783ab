from functools import lru_cache

import pytest

from yieldflow.solver import default_schedule, solve


@lru_cache(maxsize=None)
def _solve(lam, ny, nz, eps_min, depth):
    return solve(lam, (ny, nz), epsilon_schedule=default_schedule(eps_min), depth=depth)


@pytest.fixture(scope="session")
def solved():
    """``solved(lam, ny=129, nz=513, eps_min=1e-4, depth=None)``, each case solved once per session."""

    def get(lam, ny=129, nz=513, eps_min=1e-4, depth=None):
        return _solve(float(lam), int(ny), int(nz), float(eps_min), depth)

    return get
