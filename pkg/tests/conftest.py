import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from maskforge import geometry, synthesis


@pytest.fixture(scope="session")
def canon():
    return geometry.default_canonical()


@pytest.fixture(scope="session")
def library():
    return synthesis.default_library()
