import sys
from pathlib import Path

import pytest

# Make the sibling oracles module importable from every test file.
sys.path.insert(0, str(Path(__file__).parent))

from lamina import catalog


@pytest.fixture
def fib():
    return catalog.fibonacci()


@pytest.fixture
def trib():
    return catalog.tribonacci()


@pytest.fixture
def split_fib():
    return catalog.split_fibonacci()
