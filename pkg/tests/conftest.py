import pytest
from hypothesis import settings

from phsolve import problems

settings.register_profile("suite", deadline=None, max_examples=50)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def resonant_problem():
    return problems.example13()


@pytest.fixture(scope="session")
def manufactured_problem():
    return problems.manufactured_wellposed()


@pytest.fixture(scope="session")
def transport_problem():
    return problems.pure_forcing()
