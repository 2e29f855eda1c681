import time

import pytest

from fscap import builtin_channel, induce_strategy_channel, value_iteration
from fscap import presets as pre


@pytest.fixture(scope="session")
def dp_cache():
    """Value-iteration solutions shared by the DP property and acceptance tests.

    Keys: ("trapdoor", res) for res in 16/32/64/128, ("ising", 64),
    ("noisy05", 64).  Values: (solution, wall seconds).
    """
    cache = {}
    trapdoor = induce_strategy_channel(builtin_channel("trapdoor"), pre.xor_strategies())
    for res in (16, 32, 64, 128):
        t0 = time.time()
        sol = value_iteration(trapdoor, grid_res=res, action_res=4, tol=1e-4)
        cache[("trapdoor", res)] = (sol, time.time() - t0)
    ising = induce_strategy_channel(builtin_channel("ising"), pre.identity_strategies())
    t0 = time.time()
    cache[("ising", 64)] = (value_iteration(ising, grid_res=64, action_res=4, tol=1e-4),
                            time.time() - t0)
    noisy = induce_strategy_channel(builtin_channel("noisy_ising", eta=0.5),
                                    pre.identity_strategies())
    t0 = time.time()
    cache[("noisy05", 64)] = (value_iteration(noisy, grid_res=64, action_res=4, tol=1e-4),
                              time.time() - t0)
    return cache
