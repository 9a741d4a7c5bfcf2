"""Shared fixtures: built potentials and their classifications.

Building and classifying the reference potentials costs a few seconds, so
every test module shares one session-scoped copy.
"""

import pytest

import heinegas as hg


@pytest.fixture(scope="session")
def ginibre_pot():
    return hg.ginibre()


@pytest.fixture(scope="session")
def case1_pot():
    return hg.build_case1((1.5, 2.0), w=(0.2, 0.2))


@pytest.fixture(scope="session")
def case1_data(case1_pot):
    return hg.droplet_data(case1_pot)


@pytest.fixture(scope="session")
def case2_pot():
    return hg.build_case2(((0.0, 1.0), (1.6, 2.2)), 0.5, t=(1.2, 1.4), w=(0.06, 0.06))


@pytest.fixture(scope="session")
def case2_data(case2_pot):
    return hg.droplet_data(case2_pot)


@pytest.fixture(scope="session")
def case2_single_pot():
    return hg.build_case2(((0.0, 1.0), (1.6, 2.2)), 0.5, t=(1.2,), w=(0.06,))


@pytest.fixture(scope="session")
def case2_single_data(case2_single_pot):
    return hg.droplet_data(case2_single_pot)


@pytest.fixture(scope="session")
def case2_bare_pot():
    return hg.build_case2(((0.0, 1.0), (1.6, 2.2)), 0.5)


@pytest.fixture(scope="session")
def case2_bare_data(case2_bare_pot):
    return hg.droplet_data(case2_bare_pot)
