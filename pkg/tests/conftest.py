import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import oracles  # noqa: E402


@pytest.fixture(scope="session")
def oracle_bases():
    """Dense (J^2, Jz) eigenbases for small n, built once per session."""
    return {n: oracles.weight_eigenbasis(n) for n in range(2, 7)}
