"""Finite-state channel kernels, built-in channels, and Shannon-strategy machinery.

Kernel layout is fixed everywhere in this package: ``kernel[y, s_next, x, s]``
holds P(y, s_next | x, s).  Beliefs and strategy tables keep the auxiliary
symbol axis first, the state axis second.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import (
    AlphabetMismatch,
    DimensionMismatch,
    EnumerationCapExceeded,
    MissingParam,
    NegativeProbability,
    ParamOutOfRange,
    RowSumError,
    UnknownChannel,
)

KERNEL_TOL = 1e-12       # row-sum tolerance for constructed kernels
FILE_KERNEL_TOL = 1e-9   # looser tolerance for kernels parsed from text

DEFAULT_STRATEGY_CAP = 4096

BUILTIN_CHANNELS = ("trapdoor", "ising", "noisy_ising", "constrained_bec", "zs_iid_dmc")

# Output symbol used for the erasure of the constrained BEC (index into Y).
BEC_ERASURE = 2


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.asarray(a, dtype=float).copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Fsc:
    """A finite-state channel P(y, s_next | x, s) with an initial-state pmf."""

    nx: int
    ns: int
    ny: int
    kernel: np.ndarray        # shape (ny, ns, nx, ns)
    initial_state: np.ndarray  # shape (ns,)


@dataclass(frozen=True)
class StrategyTable:
    """A list of functions S -> X; ``tables[u, s]`` is the input sent by strategy u."""

    nx: int
    ns: int
    tables: np.ndarray  # shape (nu, ns), integer entries in [0, nx)

    @property
    def nu(self) -> int:
        return self.tables.shape[0]


@dataclass(frozen=True)
class InducedChannel:
    """The FSC seen from the strategy alphabet: P(y, s_next | u, s)."""

    nu: int
    ns: int
    ny: int
    kernel: np.ndarray  # shape (ny, ns, nu, ns)

    def output_law(self) -> np.ndarray:
        """P(y | u, s), shape (ny, nu, ns)."""
        return self.kernel.sum(axis=1)


def validate_fsc(kernel, initial_state, tol: float = KERNEL_TOL) -> Fsc:
    """Check a kernel table and initial-state pmf and wrap them in an Fsc.

    Raises DimensionMismatch, NegativeProbability, or RowSumError naming the
    first violated constraint.
    """
    k = np.asarray(kernel, dtype=float)
    p0 = np.asarray(initial_state, dtype=float)
    if k.ndim != 4:
        raise DimensionMismatch(f"kernel must have 4 axes (y, s_next, x, s); got {k.ndim}")
    ny, ns_next, nx, ns = k.shape
    if ns_next != ns:
        raise DimensionMismatch(f"state axes disagree: s_next has {ns_next}, s has {ns}")
    if p0.shape != (ns,):
        raise DimensionMismatch(f"initial_state must have shape ({ns},); got {p0.shape}")
    if np.any(k < -tol):
        y, sp, x, s = np.unravel_index(int(np.argmin(k)), k.shape)
        raise NegativeProbability(f"kernel[{y},{sp},{x},{s}] = {k[y, sp, x, s]} < 0")
    if np.any(p0 < -tol):
        raise NegativeProbability("initial_state has a negative entry")
    rows = k.sum(axis=(0, 1))  # (nx, ns)
    bad = np.abs(rows - 1.0) > tol
    if np.any(bad):
        x, s = np.argwhere(bad)[0]
        raise RowSumError(f"kernel slice (x={x}, s={s}) sums to {rows[x, s]:.12g}, not 1")
    if abs(p0.sum() - 1.0) > tol:
        raise RowSumError(f"initial_state sums to {p0.sum():.12g}, not 1")
    return Fsc(nx=nx, ns=ns, ny=ny, kernel=_frozen(k), initial_state=_frozen(p0))


def zs_output_law() -> np.ndarray:
    """The two-state binary output law P(y | x, s), shape (2, 2, 2).

    State 0 acts as a Z-channel (x=0 -> y=0 surely, x=1 -> fair coin) and
    state 1 as an S-channel (x=0 -> fair coin, x=1 -> y=1 surely).
    """
    law = np.zeros((2, 2, 2))
    law[0, 0, 0] = 1.0            # s=0, x=0: y=0
    law[:, 1, 0] = 0.5            # s=0, x=1: uniform
    law[:, 0, 1] = 0.5            # s=1, x=0: uniform
    law[1, 1, 1] = 1.0            # s=1, x=1: y=1
    return law


def zs_dmc_pair() -> tuple[np.ndarray, np.ndarray]:
    """The memoryless channel with i.i.d. uniform state: (P(y|x,s), P(s))."""
    return zs_output_law(), np.full(2, 0.5)


def _require(value, name: str):
    if value is None:
        raise MissingParam(f"channel requires parameter '{name}'")
    return value


def builtin_channel(name: str, eta: float | None = None, eps: float | None = None) -> Fsc:
    """Construct one of the named channels studied here.

    ``trapdoor``        ZS output law with state update s+ = s ^ x ^ y.
    ``ising``           ZS output law with s+ = x.
    ``noisy_ising``     ZS output law with P(s+|x) a BSC(eta).
    ``constrained_bec`` erasure channel (erasure prob eps) with s+ = x; the
                        no-consecutive-ones input constraint is imposed through
                        the strategy set, not the kernel.
    ``zs_iid_dmc``      the ZS law with i.i.d. uniform state, packaged as an
                        FSC (the zero-look-ahead reduction of zs_dmc_pair()).
    """
    if name == "trapdoor":
        law = zs_output_law()
        k = np.zeros((2, 2, 2, 2))
        for y, x, s in itertools.product(range(2), repeat=3):
            k[y, s ^ x ^ y, x, s] = law[y, x, s]
        return validate_fsc(k, [0.5, 0.5])
    if name == "ising":
        law = zs_output_law()
        k = np.zeros((2, 2, 2, 2))
        for y, x, s in itertools.product(range(2), repeat=3):
            k[y, x, x, s] = law[y, x, s]
        return validate_fsc(k, [0.5, 0.5])
    if name == "noisy_ising":
        eta = float(_require(eta, "eta"))
        if not 0.0 <= eta <= 1.0:
            raise ParamOutOfRange(f"eta must lie in [0, 1]; got {eta}")
        law = zs_output_law()
        k = np.zeros((2, 2, 2, 2))
        for y, sp, x, s in itertools.product(range(2), repeat=4):
            flip = eta if sp != x else 1.0 - eta
            k[y, sp, x, s] = law[y, x, s] * flip
        return validate_fsc(k, [0.5, 0.5])
    if name == "constrained_bec":
        eps = float(_require(eps, "eps"))
        if not 0.0 <= eps <= 1.0:
            raise ParamOutOfRange(f"eps must lie in [0, 1]; got {eps}")
        k = np.zeros((3, 2, 2, 2))
        for x, s in itertools.product(range(2), repeat=2):
            k[x, x, x, s] = 1.0 - eps
            k[BEC_ERASURE, x, x, s] = eps
        return validate_fsc(k, [0.5, 0.5])
    if name == "zs_iid_dmc":
        dmc, pmf = zs_dmc_pair()
        return make_lookahead_fsc(dmc, pmf, 0)
    raise UnknownChannel(f"no builtin channel named '{name}'")


def enumerate_strategies(nx: int, ns: int, cap: int = DEFAULT_STRATEGY_CAP,
                         predicate=None) -> StrategyTable:
    """All nx**ns functions S -> X in lexicographic order of their value vectors.

    ``predicate`` optionally filters the enumeration (it receives the value
    vector as a tuple); this is how input constraints such as the BEC's
    no-one-from-state-one rule are imposed.
    """
    if nx < 1 or ns < 1:
        raise ParamOutOfRange("alphabet sizes must be at least 1")
    total = nx ** ns
    if total > cap:
        raise EnumerationCapExceeded(f"{nx}**{ns} = {total} strategies exceeds cap {cap}")
    vectors = [v for v in itertools.product(range(nx), repeat=ns)
               if predicate is None or predicate(v)]
    return StrategyTable(nx=nx, ns=ns, tables=np.array(vectors, dtype=int))


def strategy_table(nx: int, ns: int, tables) -> StrategyTable:
    """Wrap an explicit list of strategy value vectors, checking consistency."""
    t = np.asarray(tables, dtype=int)
    if t.ndim != 2 or t.shape[1] != ns:
        raise DimensionMismatch(f"strategy table must have shape (nu, {ns}); got {t.shape}")
    if np.any(t < 0) or np.any(t >= nx):
        raise AlphabetMismatch(f"strategy entries must lie in [0, {nx})")
    if len({tuple(row) for row in t}) != t.shape[0]:
        raise AlphabetMismatch("strategy table contains duplicate functions")
    return StrategyTable(nx=nx, ns=ns, tables=t)


def induce_strategy_channel(fsc: Fsc, strategies: StrategyTable) -> InducedChannel:
    """P(y, s_next | u, s) = P(y, s_next | f_u(s), s)."""
    if strategies.nx != fsc.nx or strategies.ns != fsc.ns:
        raise AlphabetMismatch(
            f"strategies are over (nx={strategies.nx}, ns={strategies.ns}) but the "
            f"channel has (nx={fsc.nx}, ns={fsc.ns})")
    s_idx = np.arange(fsc.ns)
    kernel = fsc.kernel[:, :, strategies.tables, s_idx[None, :]]
    return InducedChannel(nu=strategies.nu, ns=fsc.ns, ny=fsc.ny, kernel=_frozen(kernel))


def make_lookahead_fsc(dmc, state_pmf, l: int) -> Fsc:
    """Reduce a memoryless state-dependent channel with l steps of look-ahead to an FSC.

    The FSC state is the tuple (s_{i-1}, ..., s_{i-1+l}) of the current and
    the l known future states, indexed lexicographically.  Each step emits the
    output through the oldest component, shifts the tuple, and draws a fresh
    state from ``state_pmf``.  l = 0 recovers P(y|x,s) * P(s_next).
    """
    dmc = np.asarray(dmc, dtype=float)
    pmf = np.asarray(state_pmf, dtype=float)
    if l < 0:
        raise ParamOutOfRange("look-ahead depth must be non-negative")
    if dmc.ndim != 3:
        raise DimensionMismatch("dmc must have axes (y, x, s)")
    ny, nx, ns = dmc.shape
    if pmf.shape != (ns,):
        raise DimensionMismatch(f"state_pmf must have shape ({ns},)")
    if abs(pmf.sum() - 1.0) > KERNEL_TOL:
        raise RowSumError(f"state_pmf sums to {pmf.sum():.12g}, not 1")
    tuples = list(itertools.product(range(ns), repeat=l + 1))
    nt = len(tuples)
    k = np.zeros((ny, nt, nx, nt))
    for it, t in enumerate(tuples):
        for itp, tp in enumerate(tuples):
            if tp[:l] != t[1:]:
                continue
            k[:, itp, :, it] = dmc[:, :, t[0]] * pmf[tp[l]]
    return validate_fsc(k, [np.prod([pmf[c] for c in t]) for t in tuples])


def state_graph(kernel: np.ndarray) -> np.ndarray:
    """Boolean adjacency over states: s -> s_next reachable under some input."""
    return kernel.sum(axis=0).max(axis=1) > 0.0  # (s_next, s) -> transpose below


def is_strongly_connected(ch: Fsc | InducedChannel) -> bool:
    """True iff every state reaches every state in the directed state graph."""
    adj = state_graph(ch.kernel).T  # adj[s, s_next]
    n = adj.shape[0]
    for start in range(n):
        seen = np.zeros(n, dtype=bool)
        seen[start] = True
        frontier = [start]
        while frontier:
            nxt = adj[frontier].any(axis=0) & ~seen
            seen |= nxt
            frontier = list(np.flatnonzero(nxt))
        if not seen.all():
            return False
    return True
