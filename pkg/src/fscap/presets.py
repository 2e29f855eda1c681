"""Ready-made strategy tables, policies, and graph pairings for the worked channels.

These are the closed-form configurations whose rates are known exactly; the
CLI's reproduction registry and the test suite both draw from here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import channels as ch
from . import qgraph as qg
from .errors import ParamOutOfRange

GOLDEN_RATIO_RATE = math.log2((1.0 + math.sqrt(5.0)) / 2.0)

# Golden-ratio constants used by the trapdoor fixture.
B1 = math.sqrt(5.0) - 2.0
B2 = (3.0 - math.sqrt(5.0)) / 2.0
B3 = (math.sqrt(5.0) - 1.0) / 2.0
B4 = 3.0 - math.sqrt(5.0)


@dataclass(frozen=True)
class BoundSetup:
    """Everything qgraph_bound needs for one preconfigured evaluation."""

    channel: ch.InducedChannel
    graph: qg.QGraph
    policy: np.ndarray


def xor_strategies() -> ch.StrategyTable:
    """|U| = 2 with x = u XOR s."""
    return ch.strategy_table(2, 2, [[0, 1], [1, 0]])


def identity_strategies() -> ch.StrategyTable:
    """|U| = 2 with x = u, ignoring the state."""
    return ch.strategy_table(2, 2, [[0, 0], [1, 1]])


def bec_strategies() -> ch.StrategyTable:
    """|U| = 2 respecting the no-consecutive-ones constraint: x = 1 only from s = 0."""
    return ch.strategy_table(2, 2, [[0, 0], [1, 0]])


def lookahead_strategies() -> ch.StrategyTable:
    """|U| = 4 over tuple states; the sent input tracks only the known next state."""
    return ch.strategy_table(2, 4, [[0, 0, 0, 0], [0, 1, 0, 1], [1, 0, 1, 0], [1, 1, 1, 1]])


def trapdoor_policy() -> np.ndarray:
    """The golden-ratio policy: same rows at every node."""
    row = np.array([[B3, B2], [1.0, 0.0]])
    return np.tile(row, (4, 1, 1))


def ising_policy(a: float) -> np.ndarray:
    """Hold the symbol at nodes 0/2; flip with weight a at node 1, 1-a at node 3.

    Rows that never occur under the stationary law (u=1 at node 1, u=0 at
    node 3) are pinned to a point mass so the chain stays unichain.
    """
    if not 0.0 <= a <= 1.0:
        raise ParamOutOfRange(f"a must lie in [0, 1]; got {a}")
    hold = np.array([[1.0, 0.0], [0.0, 1.0]])
    pol = np.empty((4, 2, 2))
    pol[0] = hold
    pol[1] = [[a, 1.0 - a], [1.0, 0.0]]
    pol[2] = hold
    pol[3] = [[1.0, 0.0], [1.0 - a, a]]
    return pol


def bec_policy(p: float) -> np.ndarray:
    """Erasure-channel policy at symbol weight p in [0, 0.5]."""
    if not 0.0 <= p <= 0.5:
        raise ParamOutOfRange(f"p must lie in [0, 0.5]; got {p}")
    pbar = 1.0 - p
    pol = np.empty((3, 2, 2))
    pol[0] = [[1.0, 0.0], [1.0, 0.0]]
    pol[1] = [[pbar, p], [1.0, 0.0]]
    pol[2] = [[(1.0 - 2.0 * p) / pbar, p / pbar], [1.0, 0.0]]
    return pol


def lookahead_policy(alpha: float, beta: float) -> np.ndarray:
    """The two-node policy tables for the single-look-ahead channel."""
    for name, v in (("alpha", alpha), ("beta", beta)):
        if not 0.0 <= v <= 1.0:
            raise ParamOutOfRange(f"{name} must lie in [0, 1]; got {v}")
    a, b = alpha, beta
    pol = np.zeros((2, 4, 4))
    pol[0] = [[0, a, 1 - a, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, b, 1 - b, 0]]
    pol[1] = [[0, b, 1 - b, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, a, 1 - a, 0]]
    return pol


def noisy_ising_policy(a: float) -> np.ndarray:
    """Repeat-until-received policy: node 0 follows output 0, node 1 output 1."""
    if not 0.0 <= a <= 1.0:
        raise ParamOutOfRange(f"a must lie in [0, 1]; got {a}")
    pol = np.empty((2, 2, 2))
    pol[0] = [[1.0 - a, a], [0.0, 1.0]]
    pol[1] = [[1.0, 0.0], [a, 1.0 - a]]
    return pol


def trapdoor_setup() -> BoundSetup:
    fsc = ch.builtin_channel("trapdoor")
    induced = ch.induce_strategy_channel(fsc, xor_strategies())
    return BoundSetup(induced, qg.builtin_qgraph("trapdoor4"), trapdoor_policy())


def ising_setup(a: float) -> BoundSetup:
    fsc = ch.builtin_channel("ising")
    induced = ch.induce_strategy_channel(fsc, identity_strategies())
    return BoundSetup(induced, qg.builtin_qgraph("ising4"), ising_policy(a))


def bec_setup(eps: float, p: float) -> BoundSetup:
    fsc = ch.builtin_channel("constrained_bec", eps=eps)
    induced = ch.induce_strategy_channel(fsc, bec_strategies())
    return BoundSetup(induced, qg.builtin_qgraph("bec3"), bec_policy(p))


def lookahead_setup(alpha: float, beta: float) -> BoundSetup:
    dmc, pmf = ch.zs_dmc_pair()
    fsc = ch.make_lookahead_fsc(dmc, pmf, 1)
    induced = ch.induce_strategy_channel(fsc, lookahead_strategies())
    return BoundSetup(induced, qg.builtin_qgraph("two_node"), lookahead_policy(alpha, beta))


def noisy_ising_setup(eta: float, a: float) -> BoundSetup:
    fsc = ch.builtin_channel("noisy_ising", eta=eta)
    induced = ch.induce_strategy_channel(fsc, identity_strategies())
    return BoundSetup(induced, qg.builtin_qgraph("two_node"), noisy_ising_policy(a))


def ising_rate(a):
    """The closed-form rate 2 H(a) / (3 + a) of the hold/flip policy family."""
    from .infomeasures import binary_entropy
    arr = np.asarray(a, dtype=float)
    out = 2.0 * binary_entropy(arr) / (3.0 + arr)
    return float(out) if np.ndim(out) == 0 else out


def bec_rate(eps: float, p):
    """The closed-form rate H(p) / (1/(1-eps) + p)."""
    from .infomeasures import binary_entropy
    arr = np.asarray(p, dtype=float)
    out = binary_entropy(arr) / (1.0 / (1.0 - eps) + arr)
    return float(out) if np.ndim(out) == 0 else out


def lookahead_rate() -> float:
    """(7/16) log2 7 - 1, the single-look-ahead rate at the solved policy."""
    return (7.0 / 16.0) * math.log2(7.0) - 1.0


def scan_max(fn, lo: float, hi: float, step: float = 1e-6) -> tuple[float, float]:
    """Brute-force 1-D maximization on a uniform grid; returns (argmax, max)."""
    xs = np.arange(lo, hi + step / 2, step)
    try:
        ys = np.asarray(fn(xs), dtype=float)
        if ys.shape != xs.shape:
            raise TypeError
    except (TypeError, ValueError):
        ys = np.array([fn(float(x)) for x in xs])
    k = int(np.argmax(ys))
    return float(xs[k]), float(ys[k])
