import pytest

from LD_Algebra_Lab.lab_config import CACHE_ENV_VAR, Config
from LD_Algebra_Lab.laver_utils import TableCache

_SHARED_TABLES = TableCache()


def brute_force_table(k):
    """m ∗ n for every cell, memoised straight from the defining recursion."""
    size = 1 << k
    memo = {}

    def star(m, n):
        if (m, n) in memo:
            return memo[(m, n)]
        if m == 0:
            value = n
        elif n == 0:
            value = 0
        elif n == 1:
            value = (m + 1) % size
        else:
            value = star(star(m, n - 1), (m + 1) % size)
        memo[(m, n)] = value
        return value

    # top rows first keeps every lookup one level deep
    for m in reversed(range(size)):
        for n in range(size):
            star(m, n)
    return [[memo[(m, n)] for n in range(size)] for m in range(size)]


@pytest.fixture(scope="session")
def tables():
    """In-memory tables shared across the session; they never change once built."""
    return _SHARED_TABLES


@pytest.fixture
def cache_dir(tmp_path, monkeypatch):
    path = tmp_path / "cache"
    monkeypatch.setenv(CACHE_ENV_VAR, str(path))
    return path


@pytest.fixture
def config(cache_dir):
    return Config(cache_dir=str(cache_dir), fuel=20_000).validate()
