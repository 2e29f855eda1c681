"""Finite-horizon sandwich bounds and the single-letter memoryless baseline.

For horizon N the optimal directed information over causal conditionings,
taken worst-case or best-case over the initial state, brackets the feedback
capacity after a log|S|/N correction.  The memoryless baseline is the
classical strategy-channel capacity solved by alternating maximization.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .channels import InducedChannel
from .errors import BudgetExceeded, DimensionMismatch, NotAPmf, ParamOutOfRange
from .infomeasures import CausalConditioning, directed_info

DEFAULT_COMBO_BUDGET = 200_000
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SandwichResult:
    n: int
    lower: float
    upper: float
    argmax_ccd: CausalConditioning
    global_flag: bool


@dataclass(frozen=True)
class SingleLetterResult:
    rate: float
    input_pmf: np.ndarray
    iterations: int


def _history_shapes(nu: int, ny: int, horizon: int) -> list[tuple[tuple[int, ...], int]]:
    """Per-step list of (history shape, history count) for the conditionals."""
    out = []
    for i in range(1, horizon + 1):
        shape = (nu,) * (i - 1) + (ny,) * (i - 1)
        out.append((shape, int(np.prod(shape, dtype=np.int64)) if shape else 1))
    return out


def _simplex_points(dim: int, res: int) -> np.ndarray:
    """Grid pmfs with denominator res on the (dim-1)-simplex."""
    pts = [np.array(c, dtype=float) / res
           for c in itertools.product(range(res + 1), repeat=dim)
           if sum(c) == res]
    return np.array(pts)


class _CcdVariables:
    """Flat view of all per-history conditionals of a causal conditioning."""

    def __init__(self, nu: int, ny: int, horizon: int):
        self.nu, self.ny, self.horizon = nu, ny, horizon
        self.shapes = _history_shapes(nu, ny, horizon)
        self.num_histories = sum(count for _, count in self.shapes)

    def uniform(self) -> np.ndarray:
        return np.full((self.num_histories, self.nu), 1.0 / self.nu)

    def random(self, rng) -> np.ndarray:
        return rng.dirichlet(np.ones(self.nu), size=self.num_histories)

    def to_ccd(self, flat: np.ndarray) -> CausalConditioning:
        steps = []
        pos = 0
        for i, (shape, count) in enumerate(self.shapes, start=1):
            block = flat[pos:pos + count].reshape(shape + (self.nu,))
            steps.append(block)
            pos += count
        return CausalConditioning(self.nu, self.ny, tuple(steps))


def _eval_ccd(ch: InducedChannel, variables: _CcdVariables, flat: np.ndarray,
              budget: int) -> np.ndarray:
    """Directed information per initial state for one conditioning."""
    ccd = variables.to_ccd(flat)
    return np.array([directed_info(ch, ccd, s0, variables.horizon, budget=budget)
                     for s0 in range(ch.ns)])


def _coordinate_polish(ch, variables, flat, objective, budget, rounds: int = 2,
                       iters: int = 30):
    """Golden-section polish along mass-toward-symbol lines, one history at a time.

    objective maps the per-state DI vector to a scalar (min or max over s0).
    Returns (flat, best value, largest coordinate movement).
    """
    flat = flat.copy()
    best = objective(_eval_ccd(ch, variables, flat, budget))
    moved = 0.0
    nu = variables.nu
    for _ in range(rounds):
        improved = False
        for hist in range(variables.num_histories):
            for target in range(nu):
                cur = flat[hist, target].copy()

                def with_mass(m):
                    row = flat[hist].copy()
                    rest = 1.0 - row[target]
                    if rest > 1e-15:
                        row *= (1.0 - m) / rest
                    else:
                        row[:] = (1.0 - m) / (nu - 1)
                    row[target] = m
                    return row

                lo, hi = 0.0, 1.0
                a = hi - _INVPHI * (hi - lo)
                b = lo + _INVPHI * (hi - lo)
                saved = flat[hist].copy()

                def value_at(m):
                    flat[hist] = with_mass(m)
                    v = objective(_eval_ccd(ch, variables, flat, budget))
                    flat[hist] = saved
                    return v

                fa, fb = value_at(a), value_at(b)
                for _ in range(iters):
                    if fa >= fb:
                        hi, b, fb = b, a, fa
                        a = hi - _INVPHI * (hi - lo)
                        fa = value_at(a)
                    else:
                        lo, a, fa = a, b, fb
                        b = lo + _INVPHI * (hi - lo)
                        fb = value_at(b)
                m_star = a if fa >= fb else b
                f_star = max(fa, fb)
                if f_star > best + 1e-13:
                    flat[hist] = with_mass(m_star)
                    best = f_star
                    moved = max(moved, abs(m_star - cur))
                    improved = True
        if not improved:
            break
    return flat, best, moved


def sandwich_bounds(ch: InducedChannel, horizon: int, grid: int = 4,
                    combo_budget: int = DEFAULT_COMBO_BUDGET,
                    atom_budget: int = 10_000_000,
                    restarts: int = 6, seed: int = 0) -> SandwichResult:
    """Bracket the feedback capacity from horizon-N directed information.

    The conditioning is optimized over a product of per-history simplex grids
    (exhaustively when the product is small enough, otherwise by seeded
    multi-start coordinate ascent) and then polished coordinate-wise by
    golden section.  The lower bound takes the worst initial state minus
    log2|S|/N; the upper bound the best initial state plus log2|S|/N.  The
    certificate flag is heuristic: it is set only when the grid stage was
    exhaustive and the polish barely moved.
    """
    if horizon < 1 or horizon > 3:
        raise BudgetExceeded(f"horizon {horizon} outside the supported range 1..3")
    if grid < 2:
        raise DimensionMismatch("grid resolution must be at least 2")
    variables = _CcdVariables(ch.nu, ch.ny, horizon)
    points = _simplex_points(ch.nu, grid)
    npoints = points.shape[0]
    total = float(npoints) ** variables.num_histories

    def lower_obj(per_state):
        return float(per_state.min())

    def upper_obj(per_state):
        return float(per_state.max())

    best = {"lower": (-np.inf, None), "upper": (-np.inf, None)}

    def track(flat, per_state):
        for name, obj in (("lower", lower_obj), ("upper", upper_obj)):
            v = obj(per_state)
            if v > best[name][0]:
                best[name] = (v, flat.copy())

    def consider(flat):
        track(flat, _eval_ccd(ch, variables, flat, atom_budget))

    exhaustive = total <= combo_budget
    if exhaustive:
        for combo in itertools.product(range(npoints), repeat=variables.num_histories):
            consider(points[list(combo)])
    else:
        rng = np.random.default_rng(seed)
        starts = [variables.uniform()] + [variables.random(rng) for _ in range(restarts)]
        for objective in (lower_obj, upper_obj):
            for start in starts:
                flat = start.copy()
                # coordinate ascent on the grid, one history at a time
                for _ in range(4):
                    changed = False
                    for hist in range(variables.num_histories):
                        vals = []
                        saved = flat[hist].copy()
                        for p in range(npoints):
                            flat[hist] = points[p]
                            per_state = _eval_ccd(ch, variables, flat, atom_budget)
                            track(flat, per_state)
                            vals.append(objective(per_state))
                        k = int(np.argmax(vals))
                        flat[hist] = points[k]
                        if not np.allclose(points[k], saved):
                            changed = True
                    if not changed:
                        break

    moves = {}
    values = {}
    args = {}
    for name, obj in (("lower", lower_obj), ("upper", upper_obj)):
        flat, value, moved = _coordinate_polish(
            ch, variables, best[name][1],
            lambda v, o=obj: o(v), atom_budget)
        moves[name] = moved
        values[name] = value
        args[name] = flat
    correction = math.log2(ch.ns) / horizon
    spacing = 1.0 / grid
    global_flag = exhaustive and max(moves.values()) <= spacing
    return SandwichResult(
        n=horizon,
        lower=values["lower"] / horizon - correction,
        upper=values["upper"] / horizon + correction,
        argmax_ccd=variables.to_ccd(args["lower"]),
        global_flag=global_flag,
    )


def strategy_channel(dmc, state_pmf, strategies) -> np.ndarray:
    """The memoryless channel P(y | u) = sum_s P(s) P(y | f_u(s), s)."""
    dmc = np.asarray(dmc, dtype=float)
    pmf = np.asarray(state_pmf, dtype=float)
    ny = dmc.shape[0]
    tables = strategies.tables
    out = np.zeros((tables.shape[0], ny))
    for u, row in enumerate(tables):
        for s, x in enumerate(row):
            out[u] += pmf[s] * dmc[:, x, s]
    return out


def channel_capacity(p_y_u: np.ndarray, tol: float = 1e-9,
                     max_iter: int = 100_000) -> SingleLetterResult:
    """Capacity of a discrete memoryless channel by alternating maximization.

    Stops when the duality gap max_u D(P(y|u) || q) - I falls below tol, so
    the returned rate is within tol of the concave optimum.
    """
    p = np.asarray(p_y_u, dtype=float)
    if p.ndim != 2:
        raise DimensionMismatch("channel table must have axes (u, y)")
    if np.any(p < -1e-12) or np.any(np.abs(p.sum(axis=1) - 1.0) > 1e-9):
        raise NotAPmf("channel rows must be pmfs over y")
    nu = p.shape[0]
    r = np.full(nu, 1.0 / nu)
    it = 0
    mask = p > 0
    logp = np.where(mask, np.log2(np.where(mask, p, 1.0)), 0.0)
    for it in range(1, max_iter + 1):
        q = r @ p
        logq = np.where(q > 0, np.log2(np.where(q > 0, q, 1.0)), 0.0)
        d = np.where(mask, p * (logp - logq), 0.0).sum(axis=1)
        rate = float(r @ d)
        gap = float(d.max()) - rate
        if gap < tol:
            break
        r = r * np.exp2(d)
        r /= r.sum()
    return SingleLetterResult(rate=rate, input_pmf=r, iterations=it)


def shannon_strategy_capacity(dmc, state_pmf, tol: float = 1e-9) -> SingleLetterResult:
    """max_{p(u)} I(U; Y) over all strategy symbols u for a memoryless state.

    Enumerates every function from states to inputs internally, so the input
    pmf in the result is indexed by the canonical strategy order.
    """
    from .channels import enumerate_strategies
    dmc = np.asarray(dmc, dtype=float)
    ny, nx, ns = dmc.shape
    strategies = enumerate_strategies(nx, ns)
    return channel_capacity(strategy_channel(dmc, state_pmf, strategies), tol=tol)


def noisy_ising_root(eta: float) -> float:
    """Positive root of the flip-weight quadratic for the noisy state channel."""
    if not 0.0 <= eta <= 0.5:
        raise ParamOutOfRange(f"eta must lie in [0, 0.5]; got {eta}")
    a2 = 2.0 - 5.0 * eta + 2.0 * eta * eta
    b = (5.0 - 4.0 * eta) * eta
    c = -2.0 * (1.0 - eta) * eta
    if abs(a2) < 1e-12:
        return -c / b  # the quadratic degenerates at eta = 0.5; root 1/3
    return (-b + math.sqrt(b * b - 4.0 * a2 * c)) / (2.0 * a2)


def analytic_noisy_ising_bound(eta: float) -> float:
    """Closed-form achievable rate of the repeat-until-received policy.

    Evaluates the entropy expression at the quadratic's positive root; the
    root is verified against the defining equation to 1e-12.
    """
    from .infomeasures import binary_entropy
    if not 0.0 <= eta <= 0.5:
        raise ParamOutOfRange(f"eta must lie in [0, 0.5]; got {eta}")
    a = noisy_ising_root(eta)
    resid = ((2.0 - 5.0 * eta + 2.0 * eta * eta) * a * a
             + (5.0 - 4.0 * eta) * eta * a - 2.0 * (1.0 - eta) * eta)
    if abs(resid) > 1e-12:
        raise ParamOutOfRange(f"root residual {resid:.3g} exceeds 1e-12 at eta={eta}")
    ebar = 1.0 - eta
    den = a - 2.0 * a * eta + 2.0
    return (binary_entropy((2.0 - eta) * (a * ebar + eta) / den)
            - (2.0 - a * eta - a) / den * binary_entropy(eta / 2.0)
            - a * (2.0 - eta) / den * binary_entropy(ebar / 2.0))
