import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from implab import FatouEngine, model_family


@pytest.fixture(scope="session")
def fam():
    return model_family(0.0)


@pytest.fixture(scope="session")
def engine(fam):
    eng = FatouEngine(fam)
    eng.petal("incoming")
    eng.petal("outgoing")
    return eng
