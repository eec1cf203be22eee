import numpy as np
import pytest

from sstac import chain2, random_mdp, tabular_features


@pytest.fixture
def chain():
    return chain2()


@pytest.fixture
def chain_features():
    return tabular_features(2, 2)


@pytest.fixture
def mdp5():
    return random_mdp(5, 3, seed=11)


def random_policy(rng, n_states, n_actions):
    return rng.dirichlet(np.ones(n_actions), size=n_states)
