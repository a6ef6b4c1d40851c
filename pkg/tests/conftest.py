import pytest
from hypothesis import HealthCheck, settings

from kahlercert.models import flat, perturbed_flat, space_form, warped_type9

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def flat3():
    return flat()


@pytest.fixture(scope="session")
def hyperbolic():
    return space_form(-4.0)


@pytest.fixture(scope="session")
def warped():
    return warped_type9()


@pytest.fixture(scope="session")
def perturbed():
    return perturbed_flat()


@pytest.fixture(scope="session")
def all_models(flat3, hyperbolic, warped, perturbed):
    return {"flat": flat3, "space_form": hyperbolic, "warped_type9": warped, "perturbed_flat": perturbed}
