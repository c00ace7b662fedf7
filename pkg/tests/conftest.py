import pytest

from h2raman.calibration import DEFAULT_CALIBRATION
from h2raman.spectroscopy import H2_CONSTANTS


@pytest.fixture(scope="session")
def constants():
    """Default H2 constants with the measured-line table attached."""
    return H2_CONSTANTS


@pytest.fixture(scope="session")
def dunham():
    """Default H2 constants in pure Dunham mode."""
    return H2_CONSTANTS.without_lines()


@pytest.fixture(scope="session")
def calibration():
    return DEFAULT_CALIBRATION
