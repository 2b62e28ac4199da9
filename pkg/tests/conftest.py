"""
Pytest configuration file for ddfilter tests.

Puts the repository root on sys.path, resets the process-wide numerics
config around every test and provides the schedules most tests share.
"""

import pytest
import sys
from pathlib import Path

# Add parent directory to Python path so tests can import main modules
parent_dir = Path(__file__).parent.parent
if str(parent_dir) not in sys.path:
    sys.path.insert(0, str(parent_dir))

from config_DF import NumericsConfig, set_numerics_config  # noqa: E402
from sequences import NuddLevelCounts, custom_schedule, free_evolution, nudd_schedule, sdd_schedule  # noqa: E402


@pytest.fixture(autouse=True)
def default_numerics():
    """Every test starts from the built-in numerics defaults."""
    set_numerics_config(NumericsConfig())
    yield
    set_numerics_config(None)


@pytest.fixture
def hahn_echo():
    """Single qubit, one pulse at T/2."""
    return custom_schedule([[0.5]], 1.0)


@pytest.fixture
def free_pair():
    return free_evolution(2, 1.0)


@pytest.fixture
def sdd4():
    return sdd_schedule(2, 4, 1.0)


@pytest.fixture
def nudd22():
    return nudd_schedule(NuddLevelCounts((2, 2)), 1.0)


@pytest.fixture
def sample_io():
    """Directory of the example inputs shipped in sampleIO/."""
    return parent_dir / "sampleIO"
