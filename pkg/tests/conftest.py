import hypothesis
import numpy as np
import pytest

from rydberg_doa import scenarios

hypothesis.settings.register_profile(
    "default", max_examples=50, deadline=None)
hypothesis.settings.load_profile("default")


@pytest.fixture(scope="session")
def params():
    return scenarios.default_params()


@pytest.fixture(scope="session")
def rf_wavelength():
    return scenarios.two_target_scene().rf_wavelength


@pytest.fixture(scope="session")
def two_target():
    return scenarios.two_target_scene()


@pytest.fixture(scope="session")
def geometry(rf_wavelength):
    return scenarios.default_geometry(rf_wavelength)


@pytest.fixture(autouse=True)
def quiet_lo_warning():
    # tests probe the weak-LO regime on purpose
    import warnings

    from rydberg_doa.errors import LoDominanceWarning
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LoDominanceWarning)
        yield
