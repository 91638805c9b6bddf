import pytest

from geosquare import verify


@pytest.fixture(scope="session", autouse=True)
def validated_oracles():
    # the closed-form circle and wedge oracles must match a brute-force
    # angular scan before anything else relies on them
    return verify.check_oracles(10 ** 6)
