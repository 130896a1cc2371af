import os
import sys

import pytest

# Same import layout as the handler: src/ on the path, modules under utils/
sys.path.append(os.path.join(os.path.dirname(__file__), '..', 'src'))

from utils.abelian_group import build_group  # noqa: E402
from utils.elliptic import Curve  # noqa: E402


@pytest.fixture
def z7():
    return build_group('Z7')


@pytest.fixture
def curve13():
    """y^2 = x^3 + x + 1 over F_13, which has 18 points."""
    return Curve(13, 1, 1)


@pytest.fixture(autouse=True)
def _quiet_env(monkeypatch):
    monkeypatch.setenv('SUMSETLAB_WORKERS', '1')
    monkeypatch.delenv('SUMSETLAB_MEM_CAP', raising=False)
    monkeypatch.delenv('SUMSETLAB_EXACT_CAP', raising=False)
