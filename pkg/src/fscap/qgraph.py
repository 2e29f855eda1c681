"""Single-letter lower bounds from output-quantizing graphs.

A Q-graph deterministically tracks a finite statistic of the output history
via q_next = g(q, y).  Together with a stochastic table P(u_next | u, q) it
induces a Markov chain on (state, strategy symbol, graph node); when that
chain has a unique stationary law and the posterior over (state, strategy)
depends on the history only through the node, the per-node mutual information
I(U_next, U; Y | Q) is an achievable rate.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .channels import InducedChannel
from .errors import (
    AlphabetMismatch,
    DimensionMismatch,
    Disconnected,
    IncompleteLabeling,
    NotAPmf,
    NotUnique,
    UnknownGraph,
)

STATIONARY_ATOL = 1e-10
DEFAULT_BCJR_TOL = 1e-8          # analytic fixture policies
SEARCHED_BCJR_TOL = 1e-5         # numerically searched policies
_EDGE_EPS = 1e-14


@dataclass(frozen=True)
class QGraph:
    """Deterministic, complete, output-labeled transition graph g[q, y] -> q."""

    nq: int
    ny: int
    g: np.ndarray  # shape (nq, ny), integer targets


@dataclass(frozen=True)
class SuqChain:
    """The product chain over (s, u, q), flattened in that axis order."""

    ns: int
    nu: int
    nq: int
    transition: np.ndarray          # (n, n) row-stochastic, n = ns*nu*nq
    stationary: np.ndarray | None   # (n,) or None when not unique
    unique: bool
    aperiodic: bool


@dataclass(frozen=True)
class QBoundResult:
    rate: float
    bcjr_violation: float
    per_node_rewards: np.ndarray  # (nq,)
    node_weights: np.ndarray      # (nq,)
    aperiodic: bool


@dataclass(frozen=True)
class SearchResult:
    policy: np.ndarray
    result: QBoundResult
    feasible: bool


def validate_qgraph(nq: int, g) -> QGraph:
    """Check completeness (one edge per output symbol) and strong connectivity."""
    arr = np.asarray(g)
    if arr.ndim != 2 or arr.shape[0] != nq:
        raise IncompleteLabeling(f"g must have shape ({nq}, ny); got {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(arr == arr.astype(int)):
            raise IncompleteLabeling("g must contain integer node indices")
        arr = arr.astype(int)
    ny = arr.shape[1]
    if ny < 1:
        raise IncompleteLabeling("each node needs at least one outgoing edge")
    if np.any(arr < 0) or np.any(arr >= nq):
        raise IncompleteLabeling("g contains a target outside the node set")
    adj = np.zeros((nq, nq), dtype=bool)
    adj[np.repeat(np.arange(nq), ny), arr.ravel()] = True
    ncomp, _ = connected_components(csr_matrix(adj), directed=True, connection="strong")
    if ncomp != 1:
        raise Disconnected(f"Q-graph splits into {ncomp} strongly connected pieces")
    out = arr.copy()
    out.flags.writeable = False
    return QGraph(nq=nq, ny=ny, g=out)


def validate_policy(probs, nu: int, nq: int) -> np.ndarray:
    """Check a stochastic table P(u_next | u, q), indexed probs[q, u, u_next]."""
    p = np.asarray(probs, dtype=float)
    if p.shape != (nq, nu, nu):
        raise DimensionMismatch(f"policy must have shape ({nq}, {nu}, {nu}); got {p.shape}")
    if np.any(p < -1e-12):
        raise NotAPmf("policy has a negative entry")
    if np.any(np.abs(p.sum(axis=2) - 1.0) > 1e-9):
        raise NotAPmf("policy rows must sum to 1 over u_next")
    return p


def builtin_qgraph(name: str) -> QGraph:
    """The graphs used by the worked channels, nodes 0-based.

    ``two_node``   node 0 follows output 0, node 1 follows output 1.
    ``trapdoor4``  4-node graph whose stationary beliefs cycle through the
                   golden-ratio values of the trapdoor channel.
    ``ising4``     4-node graph for channels with state equal to (a noisy copy
                   of) the previous input.
    ``bec3``       3-node graph over outputs (0, 1, erasure) tracking the last
                   non-erased symbol and the erasure condition.
    """
    graphs = {
        "two_node": (2, [[0, 1], [0, 1]]),
        "trapdoor4": (4, [[3, 1], [2, 1], [3, 1], [3, 0]]),
        "ising4": (4, [[1, 3], [2, 3], [1, 3], [1, 0]]),
        "bec3": (3, [[1, 0, 1], [1, 0, 2], [1, 0, 2]]),
    }
    if name not in graphs:
        raise UnknownGraph(f"no builtin Q-graph named '{name}'")
    nq, g = graphs[name]
    return validate_qgraph(nq, g)


def _check_alphabets(ch: InducedChannel, qg: QGraph, pol: np.ndarray) -> None:
    if qg.ny != ch.ny:
        raise AlphabetMismatch(f"graph labels {qg.ny} outputs, channel has {ch.ny}")
    if pol.shape != (qg.nq, ch.nu, ch.nu):
        raise AlphabetMismatch(
            f"policy shape {pol.shape} does not match (nq={qg.nq}, nu={ch.nu})")


def _transition_tensor(ch: InducedChannel, qg: QGraph, pol: np.ndarray) -> np.ndarray:
    """P(s+, u+, q+ | s, u, q) as a 6-axis tensor (s, u, q, s+, u+, q+)."""
    onehot = np.zeros((qg.nq, qg.ny, qg.nq))
    onehot[np.repeat(np.arange(qg.nq), qg.ny),
           np.tile(np.arange(qg.ny), qg.nq), qg.g.ravel()] = 1.0
    # pol[q, u, t] * kernel[y, p, t, s] * onehot[q, y, r] -> (s, u, q, p, t, r)
    return np.einsum("qut,ypts,qyr->suqptr", pol, ch.kernel, onehot, optimize=True)


def _closed_classes(adj: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """SCC labels plus the node sets of the closed (recurrent) classes."""
    n = adj.shape[0]
    ncomp, labels = connected_components(csr_matrix(adj), directed=True,
                                         connection="strong")
    closed = []
    for c in range(ncomp):
        nodes = np.flatnonzero(labels == c)
        leaves = adj[nodes].any(axis=0) & ~np.isin(np.arange(n), nodes)
        if not leaves.any():
            closed.append(nodes)
    return labels, closed


def _class_aperiodic(adj: np.ndarray, nodes: np.ndarray) -> bool:
    """gcd-of-cycle-lengths test on one strongly connected class."""
    index = {int(v): i for i, v in enumerate(nodes)}
    level = {int(nodes[0]): 0}
    frontier = [int(nodes[0])]
    g = 0
    while frontier:
        nxt = []
        for v in frontier:
            for w in np.flatnonzero(adj[v]):
                w = int(w)
                if w not in index:
                    continue
                if w in level:
                    g = math.gcd(g, abs(level[v] + 1 - level[w]))
                else:
                    level[w] = level[v] + 1
                    nxt.append(w)
        frontier = nxt
    # edges between already-leveled nodes not seen during BFS
    for v in nodes:
        for w in np.flatnonzero(adj[int(v)]):
            if int(w) in index:
                g = math.gcd(g, abs(level[int(v)] + 1 - level[int(w)]))
    return g == 1


def stationary_distribution(transition: np.ndarray) -> np.ndarray:
    """The unique pi with pi T = pi, or NotUnique if several closed classes exist.

    Transient states receive mass zero; the linear solve runs on the single
    closed communicating class.
    """
    T = np.asarray(transition, dtype=float)
    n = T.shape[0]
    if T.ndim != 2 or T.shape[1] != n:
        raise DimensionMismatch("transition matrix must be square")
    if np.any(np.abs(T.sum(axis=1) - 1.0) > 1e-9):
        raise NotAPmf("transition matrix rows must sum to 1")
    adj = T > _EDGE_EPS
    _, closed = _closed_classes(adj)
    if len(closed) != 1:
        raise NotUnique(f"chain has {len(closed)} closed communicating classes")
    nodes = closed[0]
    Tc = T[np.ix_(nodes, nodes)]
    m = len(nodes)
    a = Tc.T - np.eye(m)
    a[-1, :] = 1.0
    b = np.zeros(m)
    b[-1] = 1.0
    try:
        pi_c = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        pi_c, *_ = np.linalg.lstsq(np.vstack([Tc.T - np.eye(m), np.ones(m)]),
                                   np.concatenate([np.zeros(m), [1.0]]), rcond=None)
    pi_c = np.maximum(pi_c, 0.0)
    pi_c /= pi_c.sum()
    pi = np.zeros(n)
    pi[nodes] = pi_c
    return pi


def build_suq_chain(ch: InducedChannel, qg: QGraph, pol) -> SuqChain:
    """Build the product chain and, when possible, its stationary distribution."""
    pol = validate_policy(pol, ch.nu, qg.nq)
    _check_alphabets(ch, qg, pol)
    n = ch.ns * ch.nu * qg.nq
    T = _transition_tensor(ch, qg, pol).reshape(n, n)
    adj = T > _EDGE_EPS
    _, closed = _closed_classes(adj)
    unique = len(closed) == 1
    stationary = None
    aperiodic = False
    if unique:
        stationary = stationary_distribution(T)
        aperiodic = _class_aperiodic(adj, closed[0])
    return SuqChain(ns=ch.ns, nu=ch.nu, nq=qg.nq, transition=T,
                    stationary=stationary, unique=unique, aperiodic=aperiodic)


def _node_joints(ch: InducedChannel, qg: QGraph, pol: np.ndarray,
                 pi3: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-node joints P(u+, u, y | q) and the node weights pi(q).

    pi3 is the stationary law reshaped to (ns, nu, nq).
    """
    piq = pi3.sum(axis=(0, 1))
    py_us = ch.kernel.sum(axis=1)  # P(y | u+, s), axes (y, u+, s)
    # N[q, t, u, y] = sum_s pi(u, s | q) pol[q, u, t] P(y | t, s)
    joint = np.einsum("suq,qut,yts->qtuy", pi3, pol, py_us, optimize=True)
    safe = np.where(piq > 0, piq, 1.0)
    return joint / safe[:, None, None, None], piq


def _pair_output_mi(joint: np.ndarray) -> float:
    """I((A, B); Y) for one normalized joint with axes (a, b, y)."""
    py = joint.sum(axis=(0, 1))
    pab = joint.sum(axis=2)
    mask = joint > 0
    den = pab[:, :, None] * py[None, None, :]
    ratio = np.where(mask, joint / np.where(den > 0, den, 1.0), 1.0)
    return float(np.sum(joint[mask] * np.log2(ratio[mask])))


def _bcjr_violation(ch: InducedChannel, qg: QGraph, pol: np.ndarray,
                    pi3: np.ndarray) -> float:
    """max |P(s+, u+ | q+, q, y) - P(s+, u+ | q+)| over positive (q, y)."""
    # W[q, y, p, t] = P(q, y, s+ = p, u+ = t)
    W = np.einsum("suq,qut,ypts->qypt", pi3, pol, ch.kernel, optimize=True)
    pqy = W.sum(axis=(2, 3))
    agg = np.zeros((qg.nq, ch.ns, ch.nu))
    for q in range(qg.nq):
        for y in range(qg.ny):
            agg[qg.g[q, y]] += W[q, y]
    pq_next = agg.sum(axis=(1, 2))
    cond_qnext = agg / np.where(pq_next > 0, pq_next, 1.0)[:, None, None]
    violation = 0.0
    for q in range(qg.nq):
        for y in range(qg.ny):
            if pqy[q, y] <= _EDGE_EPS:
                continue
            diff = W[q, y] / pqy[q, y] - cond_qnext[qg.g[q, y]]
            violation = max(violation, float(np.abs(diff).max()))
    return violation


def check_bcjr_invariance(ch: InducedChannel, qg: QGraph, pol, pi,
                          tol: float = DEFAULT_BCJR_TOL) -> tuple[bool, float]:
    """Largest deviation of P(s+, u+ | q+, q, y) from P(s+, u+ | q+).

    ``pi`` must be the stationary law of the chain built from the same inputs.
    Returns (ok, violation) where ok means violation <= tol.
    """
    pol = validate_policy(pol, ch.nu, qg.nq)
    _check_alphabets(ch, qg, pol)
    pi3 = np.asarray(pi, dtype=float).reshape(ch.ns, ch.nu, qg.nq)
    violation = _bcjr_violation(ch, qg, pol, pi3)
    return violation <= tol, violation


def qgraph_bound(ch: InducedChannel, qg: QGraph, pol,
                 bcjr_tol: float = DEFAULT_BCJR_TOL) -> QBoundResult:
    """Evaluate the achievable rate I(U+, U; Y | Q) for one policy.

    The rate is a capacity lower bound only when the returned BCJR violation
    is within tolerance and the chain is aperiodic; callers check the fields.
    """
    pol = validate_policy(pol, ch.nu, qg.nq)
    _check_alphabets(ch, qg, pol)
    chain = build_suq_chain(ch, qg, pol)
    if not chain.unique:
        raise NotUnique("policy induces more than one closed communicating class")
    pi3 = chain.stationary.reshape(ch.ns, ch.nu, qg.nq)
    joints, piq = _node_joints(ch, qg, pol, pi3)
    rewards = np.array([_pair_output_mi(joints[q]) if piq[q] > 0 else 0.0
                        for q in range(qg.nq)])
    _, violation = check_bcjr_invariance(ch, qg, pol, chain.stationary, tol=bcjr_tol)
    return QBoundResult(rate=float(piq @ rewards), bcjr_violation=violation,
                        per_node_rewards=rewards, node_weights=piq,
                        aperiodic=chain.aperiodic)


class _FastEval:
    """Penalized objective evaluations for the policy search."""

    def __init__(self, ch: InducedChannel, qg: QGraph):
        self.ch = ch
        self.qg = qg
        self.n = ch.ns * ch.nu * qg.nq
        eye = np.eye(qg.nq)
        self.onehot = eye[qg.g]  # (q, y, q+)

    def stationary(self, pol: np.ndarray) -> np.ndarray | None:
        """Solve pi T = pi directly; None when the chain is not unichain."""
        T = np.einsum("qut,ypts,qyr->suqptr", pol, self.ch.kernel, self.onehot,
                      optimize=True).reshape(self.n, self.n)
        a = T.T - np.eye(self.n)
        a[-1, :] = 1.0
        b = np.zeros(self.n)
        b[-1] = 1.0
        try:
            pi = np.linalg.solve(a, b)
        except np.linalg.LinAlgError:
            return None
        if pi.min() < -1e-8:
            return None
        pi = np.maximum(pi, 0.0)
        total = pi.sum()
        if not np.isfinite(total) or total <= 0:
            return None
        pi /= total
        if np.abs(pi @ T - pi).max() > 1e-9:
            return None
        return pi

    def rate_and_violation(self, pol: np.ndarray) -> tuple[float, float] | None:
        pi = self.stationary(pol)
        if pi is None:
            return None
        pi3 = pi.reshape(self.ch.ns, self.ch.nu, self.qg.nq)
        joints, piq = _node_joints(self.ch, self.qg, pol, pi3)
        rate = float(sum(piq[q] * _pair_output_mi(joints[q])
                         for q in range(self.qg.nq) if piq[q] > 0))
        return rate, _bcjr_violation(self.ch, self.qg, pol, pi3)

    def objective(self, pol: np.ndarray, lam: float) -> float:
        rv = self.rate_and_violation(pol)
        if rv is None:
            return -1e18
        rate, violation = rv
        return rate - lam * violation * violation

    def relevant_rows(self, pol: np.ndarray) -> list[tuple[int, int]]:
        """(q, u) rows carrying stationary mass; others cannot move the bound."""
        pi = self.stationary(pol)
        if pi is None:
            return [(q, u) for q in range(self.qg.nq) for u in range(self.ch.nu)]
        mass = pi.reshape(self.ch.ns, self.ch.nu, self.qg.nq).sum(axis=0)  # (u, q)
        return [(q, u) for q in range(self.qg.nq) for u in range(self.ch.nu)
                if mass[u, q] > 1e-10]


def _row_with_mass(row: np.ndarray, target: int, m: float) -> np.ndarray:
    out = row.copy()
    rest = 1.0 - out[target]
    if rest > 1e-15:
        out *= (1.0 - m) / rest
    else:
        out[:] = (1.0 - m) / max(len(out) - 1, 1)
    out[target] = m
    return out


def _coordinate_sweeps(ev: _FastEval, pol: np.ndarray, lam: float, sweeps: int,
                       scan: int = 7, golden_iters: int = 0) -> tuple[np.ndarray, float]:
    """Ascent on the penalized objective along mass-toward-symbol lines."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    pol = pol.copy()
    best = ev.objective(pol, lam)
    for _ in range(sweeps):
        improved = False
        for q, u in ev.relevant_rows(pol):
            for target in range(ev.ch.nu):
                row = pol[q, u].copy()

                def value_at(m):
                    pol[q, u] = _row_with_mass(row, target, m)
                    v = ev.objective(pol, lam)
                    pol[q, u] = row
                    return v

                grid = np.linspace(0.0, 1.0, scan)
                vals = [value_at(float(m)) for m in grid]
                k = int(np.argmax(vals))
                m_star, f_star = float(grid[k]), vals[k]
                if golden_iters:
                    lo = float(grid[max(k - 1, 0)])
                    hi = float(grid[min(k + 1, scan - 1)])
                    a = hi - invphi * (hi - lo)
                    b = lo + invphi * (hi - lo)
                    fa, fb = value_at(a), value_at(b)
                    for _ in range(golden_iters):
                        if fa >= fb:
                            hi, b, fb = b, a, fa
                            a = hi - invphi * (hi - lo)
                            fa = value_at(a)
                        else:
                            lo, a, fa = a, b, fb
                            b = lo + invphi * (hi - lo)
                            fb = value_at(b)
                    if max(fa, fb) > f_star:
                        m_star = a if fa >= fb else b
                        f_star = max(fa, fb)
                if f_star > best + 1e-12:
                    pol[q, u] = _row_with_mass(row, target, m_star)
                    best = f_star
                    improved = True
        if not improved:
            break
    return pol, best


def _corner_policies(nq: int, nu: int, cap: int = 1024) -> list[np.ndarray]:
    """All deterministic policies when their count fits under the cap."""
    rows = [np.eye(nu)[k] for k in range(nu)]
    total = nu ** (nq * nu)
    if total > cap:
        return []
    out = []
    for combo in itertools.product(range(nu), repeat=nq * nu):
        pol = np.array([rows[k] for k in combo]).reshape(nq, nu, nu)
        out.append(pol)
    return out


def _node_beliefs(ev: _FastEval, pol: np.ndarray) -> list[np.ndarray] | None:
    pi = ev.stationary(pol)
    if pi is None:
        return None
    pi3 = pi.reshape(ev.ch.ns, ev.ch.nu, ev.qg.nq)
    piq = pi3.sum(axis=(0, 1))
    return [pi3[:, :, q].T / piq[q] if piq[q] > 0
            else np.full((ev.ch.nu, ev.ch.ns), 1.0 / (ev.ch.nu * ev.ch.ns))
            for q in range(ev.qg.nq)]


def _invariance_projection(ev: _FastEval, pol: np.ndarray, frozen=()) -> np.ndarray:
    """One fixed-point projection of the policy toward the invariant manifold.

    With the node beliefs frozen at the current stationary conditionals, the
    requirement that every posterior coincide with the target node's belief
    is linear in the action entries (one free scale per output), so each
    node's action solves a small least-squares system and is clipped back to
    the simplex.  Rows listed in ``frozen`` (as (q, u) pairs) are held fixed
    and contribute constants; this lets boundary rows stay on the boundary.
    """
    ch, qg = ev.ch, ev.qg
    nu, ns, ny = ch.nu, ch.ns, qg.ny
    frozen = set(frozen)
    beliefs = _node_beliefs(ev, pol)
    if beliefs is None:
        return pol
    newpol = pol.copy()
    for q in range(qg.nq):
        free = [u for u in range(nu) if (q, u) not in frozen]
        if not free:
            continue
        beta = beliefs[q]
        col = {u: k for k, u in enumerate(free)}
        nvar = len(free) * nu + ny
        rows = []
        for y in range(ny):
            tgt = beliefs[qg.g[q, y]]
            for t in range(nu):
                for p in range(ns):
                    row = np.zeros(nvar)
                    const = 0.0
                    for u in range(nu):
                        coef = float(beta[u] @ ch.kernel[y, p, t, :])
                        if u in col:
                            row[col[u] * nu + t] = coef
                        else:
                            const += coef * pol[q, u, t]
                    row[len(free) * nu + y] = -tgt[t, p]
                    rows.append((row, -const))
        for u in free:  # row normalization, weighted to anchor the scale
            row = np.zeros(nvar)
            row[col[u] * nu:(col[u] + 1) * nu] = 3.0
            rows.append((row, 3.0))
        mat = np.array([r for r, _ in rows])
        rhs = np.array([b for _, b in rows])
        sol, *_ = np.linalg.lstsq(mat, rhs, rcond=None)
        a = np.maximum(sol[:len(free) * nu].reshape(len(free), nu), 0.0)
        sums = a.sum(axis=1, keepdims=True)
        a = np.where(sums > 1e-12, a / np.where(sums > 1e-12, sums, 1.0), 1.0 / nu)
        for u in free:
            newpol[q, u] = a[col[u]]
    return newpol


def _freeze_vertex_rows(pol: np.ndarray, frozen: set, eps: float = 1e-4):
    """Pin rows that have numerically reached a simplex vertex."""
    nq, nu, _ = pol.shape
    for q in range(nq):
        for u in range(nu):
            if (q, u) in frozen:
                continue
            t = int(np.argmax(pol[q, u]))
            if pol[q, u, t] >= 1.0 - eps:
                pol[q, u] = 0.0
                pol[q, u, t] = 1.0
                frozen.add((q, u))
    return pol, frozen


def _converge_projection(ev: _FastEval, pol: np.ndarray, frozen: set,
                         rounds: int = 300):
    """Iterate the invariance projection, keeping the best iterate seen.

    Rows that land on vertices get frozen so boundary branches of the
    invariant manifold are reachable; the best iterate is judged by
    (violation small, rate), guarding against fixed points that drift off a
    good branch toward a degenerate one.
    """
    pol, frozen = _freeze_vertex_rows(pol.copy(), set(frozen))
    best_key, best_pol = (-1, -np.inf), pol
    prev2 = prev1 = None
    cur_viol = np.inf
    for k in range(rounds):
        pol = _invariance_projection(ev, pol, frozen)
        pol, frozen = _freeze_vertex_rows(pol, frozen)
        if prev1 is not None and prev2 is not None and k % 8 == 7:
            # Aitken extrapolation of the slow linear mode, kept only if it
            # actually reduces the violation
            d1 = prev1 - prev2
            d2 = pol - prev1
            den = d2 - d1
            with np.errstate(divide="ignore", invalid="ignore"):
                extra = np.where(np.abs(den) > 1e-14, pol - d2 * d2 / den, pol)
            extra = np.maximum(extra, 0.0)
            sums = extra.sum(axis=2, keepdims=True)
            extra = np.where(sums > 1e-12, extra / np.where(sums > 1e-12, sums, 1.0),
                             1.0 / ev.ch.nu)
            rv = ev.rate_and_violation(extra)
            if rv is not None and rv[1] < cur_viol:
                pol = extra
            prev2 = prev1 = None
        rv = ev.rate_and_violation(pol)
        if rv is None:
            break
        rate, cur_viol = rv
        key = (1 if cur_viol <= 1e-9 else 0, rate - min(cur_viol, 1.0))
        if key > best_key:
            best_key, best_pol = key, pol.copy()
        if cur_viol < 1e-13:
            break
        prev2, prev1 = prev1, pol.copy()
    return best_pol, frozen, best_key


def _snap_boundary_rows(ev: _FastEval, incumbent: np.ndarray,
                        rounds: int = 4) -> np.ndarray:
    """Greedily pin rows to simplex vertices when that raises the bound.

    The invariant-manifold branch carrying the optimum often has
    deterministic rows that the least-squares projection cannot hold: each
    trial snaps one row of the current source policy to a vertex, lets the
    projection converge around it (auto-freezing rows that reach vertices on
    their own), and keeps the branch if it is invariant with a higher rate.
    Trials branch from the pre-projection incumbent first because the free
    fixed point may drift to a degenerate branch.
    """
    best_cand, best_frozen, best_key = _converge_projection(ev, incumbent, set())
    src, src_frozen = incumbent, set()
    for _ in range(rounds):
        improved = False
        for q in range(ev.qg.nq):
            for u in range(ev.ch.nu):
                if (q, u) in src_frozen or improved:
                    continue
                for t in range(ev.ch.nu):
                    trial = src.copy()
                    trial[q, u] = 0.0
                    trial[q, u, t] = 1.0
                    cand, tf, key = _converge_projection(ev, trial,
                                                         src_frozen | {(q, u)})
                    if key > best_key:
                        best_cand, best_frozen, best_key = cand, tf, key
                        improved = True
                        break
        if improved:
            src, src_frozen = best_cand, best_frozen
        else:
            break
    return best_cand


def _local_rate_sweep(ev: _FastEval, pol: np.ndarray, span: float,
                      scan: int = 5, lam: float = 1.0) -> np.ndarray:
    """One sweep of small coordinate moves favoring rate near the manifold."""
    rv = ev.rate_and_violation(pol)
    best = -1e18 if rv is None else rv[0] - lam * rv[1] ** 2
    pol = pol.copy()
    for q in range(ev.qg.nq):
        for u in range(ev.ch.nu):
            for t in range(ev.ch.nu):
                row = pol[q, u].copy()
                cur = float(row[t])
                for m in np.linspace(max(0.0, cur - span), min(1.0, cur + span), scan):
                    pol[q, u] = _row_with_mass(row, t, float(m))
                    rv = ev.rate_and_violation(pol)
                    v = -1e18 if rv is None else rv[0] - lam * rv[1] ** 2
                    if v > best + 1e-13:
                        best = v
                        row = pol[q, u].copy()
                    else:
                        pol[q, u] = row
    return pol


def search_policy(ch: InducedChannel, qg: QGraph, restarts: int = 20,
                  penalty: float = 100.0, tol: float = SEARCHED_BCJR_TOL,
                  seed: int = 0, keep: int = 3, cycles: int = 40) -> SearchResult:
    """Find a policy maximizing the bound subject to approximate invariance.

    Multi-start coordinate search on rate - lambda * violation**2 (the weight
    starts two decades below ``penalty``: a tight penalty traps the sweep at
    degenerate invariant policies before any rate builds up), followed by a
    feasibility polish that alternates stationary-distribution recomputation,
    small rate-improving coordinate moves, and the least-squares projection
    of the policy onto the posterior-consistency conditions.  Starts combine
    the uniform policy, deterministic corner policies, and seeded Dirichlet
    draws.  Returns the best candidate with violation <= tol, or the best
    infeasible one flagged via ``feasible=False``.
    """
    pol0 = validate_policy(np.full((qg.nq, ch.nu, ch.nu), 1.0 / ch.nu), ch.nu, qg.nq)
    _check_alphabets(ch, qg, pol0)
    ev = _FastEval(ch, qg)
    rng = np.random.default_rng(seed)
    lam0 = penalty / 100.0
    corner_pool = _corner_policies(qg.nq, ch.nu)
    corners = sorted(corner_pool, key=lambda p: -ev.objective(p, lam0))
    corners = corners[:max(restarts // 2, 4)]
    starts = ([pol0] + corners
              + [rng.dirichlet(np.ones(ch.nu), size=(qg.nq, ch.nu))
                 for _ in range(max(restarts - 1 - len(corners), 0))])
    # stage one: penalized coordinate sweeps to shortlist basins
    shortlist = []
    for start in starts:
        cand, score = _coordinate_sweeps(ev, start, lam0, sweeps=3, scan=9)
        shortlist.append((score, cand))
    shortlist.sort(key=lambda t: -t[0])
    candidates = [cand for _, cand in shortlist[:keep]]
    # stage two: alternate projection onto the invariance conditions with
    # shrinking local rate moves, then snap promising rows to the simplex
    # boundary (the projection alone keeps rows interior)
    finalists = []
    for cand in candidates:
        pol = _invariance_projection(ev, cand)
        span = 0.1
        for _ in range(cycles):
            pol = _local_rate_sweep(ev, pol, span=span)
            pol = _invariance_projection(ev, pol)
            span = max(span * 0.85, 0.01)
        finalists.append(_snap_boundary_rows(ev, pol))
        finalists.append(cand)
    best = None
    for cand in finalists:
        try:
            result = qgraph_bound(ch, qg, cand, bcjr_tol=tol)
        except NotUnique:
            continue
        feasible = result.bcjr_violation <= tol
        key = (feasible, round(result.rate, 12), tuple(-cand.ravel()))
        if best is None or key > best[0]:
            best = (key, cand, result, feasible)
    if best is None:
        raise NotUnique("no candidate policy induced a unichain lattice")
    _, pol, result, feasible = best
    return SearchResult(policy=pol, result=result, feasible=feasible)
