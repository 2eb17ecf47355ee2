import pytest

from sheafhist.contexts import close_poset, context_from_commuting
from sheafhist.scenario import FIXTURES, load_scenario

from states import PX, PZ


@pytest.fixture
def z_ctx():
    return context_from_commuting([PZ], name="z")


@pytest.fixture
def x_ctx():
    return context_from_commuting([PX], name="x")


@pytest.fixture
def z_poset(z_ctx):
    return close_poset([z_ctx])


@pytest.fixture
def zx_poset(z_ctx, x_ctx):
    return close_poset([z_ctx, x_ctx])


@pytest.fixture(scope="session")
def scenarios():
    return {name: load_scenario(name) for name in FIXTURES}


@pytest.fixture(scope="session")
def fixture_posets(scenarios):
    return [p for sc in scenarios.values() for p in sc.posets.values()]
