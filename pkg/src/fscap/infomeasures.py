"""Exact information functionals on finite joint tables.

Everything is computed by full enumeration in base-2 logarithms, with the
conventions 0*log(0) = 0 and conditionals skipped where the conditioning
event has probability zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import InducedChannel
from .errors import AxisOverlap, BudgetExceeded, DimensionMismatch, NotAPmf

PMF_TOL = 1e-10
DEFAULT_ATOM_BUDGET = 10_000_000


def _xlog2(p: np.ndarray) -> np.ndarray:
    """p * log2(p) with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    mask = p > 0
    out[mask] = p[mask] * np.log2(p[mask])
    return out


def entropy(pmf) -> float:
    """Shannon entropy in bits of a probability vector."""
    p = np.asarray(pmf, dtype=float).ravel()
    if np.any(p < -PMF_TOL) or abs(p.sum() - 1.0) > 1e-9:
        raise NotAPmf(f"not a pmf: sum={p.sum():.12g}, min={p.min():.3g}")
    return float(-_xlog2(np.maximum(p, 0.0)).sum())


def binary_entropy(p):
    """H(p) for a Bernoulli(p); accepts scalars or arrays."""
    arr = np.asarray(p, dtype=float)
    if np.any(arr < -1e-12) or np.any(arr > 1.0 + 1e-12):
        raise NotAPmf(f"binary entropy argument outside [0, 1]: {p}")
    arr = np.clip(arr, 0.0, 1.0)
    out = -(_xlog2(arr) + _xlog2(1.0 - arr))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class JointTable:
    """A named joint pmf: ``probs`` has one axis per entry of ``axes``."""

    axes: tuple[str, ...]
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != len(self.axes):
            raise DimensionMismatch(
                f"{len(self.axes)} axis names but table has {p.ndim} axes")
        if np.any(p < -PMF_TOL):
            raise NotAPmf("joint table has a negative entry")
        if abs(p.sum() - 1.0) > PMF_TOL:
            raise NotAPmf(f"joint table sums to {p.sum():.12g}, not 1")
        object.__setattr__(self, "probs", p)

    def axis_index(self, name: str) -> int:
        try:
            return self.axes.index(name)
        except ValueError:
            raise DimensionMismatch(f"no axis named '{name}' in {self.axes}") from None

    def marginal(self, keep: tuple[str, ...]) -> np.ndarray:
        """Marginal table over ``keep``, axes in the order given."""
        drop = tuple(i for i, n in enumerate(self.axes) if n not in keep)
        m = self.probs.sum(axis=drop) if drop else self.probs
        kept = [n for n in self.axes if n in keep]
        return np.moveaxis(m, [kept.index(n) for n in keep], range(len(keep)))


def conditional_mi(joint: JointTable, a_axes, b_axes, c_axes=()) -> float:
    """I(A; B | C) in bits; axes not named in the three groups are marginalized."""
    a_axes, b_axes, c_axes = tuple(a_axes), tuple(b_axes), tuple(c_axes)
    groups = a_axes + b_axes + c_axes
    if len(set(groups)) != len(groups):
        raise AxisOverlap(f"axis groups overlap: {a_axes}, {b_axes}, {c_axes}")
    for name in groups:
        joint.axis_index(name)

    p_abc = joint.marginal(a_axes + b_axes + c_axes)
    na, nb = len(a_axes), len(b_axes)
    ax_a = tuple(range(na))
    ax_b = tuple(range(na, na + nb))
    p_bc = p_abc.sum(axis=ax_a)
    p_ac = p_abc.sum(axis=ax_b)
    p_c = p_bc.sum(axis=tuple(range(nb)))

    # I = sum p(a,b,c) log2[ p(a,b,c) p(c) / (p(a,c) p(b,c)) ], zero terms skipped.
    pa = p_ac.reshape(p_ac.shape[:na] + (1,) * nb + p_ac.shape[na:])
    pb = p_bc.reshape((1,) * na + p_bc.shape)
    pc = p_c.reshape((1,) * (na + nb) + p_c.shape)
    mask = p_abc > 0
    num = p_abc * np.where(pc > 0, pc, 1.0)
    den = np.where(pa > 0, pa, 1.0) * np.where(pb > 0, pb, 1.0)
    ratio = np.where(mask, num / den, 1.0)
    return float(np.sum(p_abc[mask] * np.log2(ratio[mask])))


@dataclass(frozen=True)
class CausalConditioning:
    """Per-step conditionals P(u_i | u^{i-1}, y^{i-1}), i = 1..N.

    ``steps[i-1]`` has shape (nu,)*(i-1) + (ny,)*(i-1) + (nu,), the last axis
    being u_i; every slice over the last axis is a pmf.
    """

    nu: int
    ny: int
    steps: tuple[np.ndarray, ...]

    def __post_init__(self):
        steps = tuple(np.asarray(s, dtype=float) for s in self.steps)
        for i, s in enumerate(steps, start=1):
            want = (self.nu,) * (i - 1) + (self.ny,) * (i - 1) + (self.nu,)
            if s.shape != want:
                raise DimensionMismatch(f"step {i} must have shape {want}; got {s.shape}")
            sums = s.sum(axis=-1)
            if np.any(np.abs(sums - 1.0) > PMF_TOL) or np.any(s < -PMF_TOL):
                raise NotAPmf(f"step {i} conditionals are not pmfs over u_{i}")
        object.__setattr__(self, "steps", steps)

    @property
    def horizon(self) -> int:
        return len(self.steps)

    @classmethod
    def iid_uniform(cls, nu: int, ny: int, horizon: int) -> "CausalConditioning":
        return cls(nu, ny, tuple(
            np.full((nu,) * (i - 1) + (ny,) * (i - 1) + (nu,), 1.0 / nu)
            for i in range(1, horizon + 1)))


def _axis_names(n: int) -> tuple[list[str], list[str]]:
    return [f"u{i}" for i in range(1, n + 1)], [f"y{i}" for i in range(1, n + 1)]


def unrolled_joint(ch: InducedChannel, ccd: CausalConditioning, s0: int, horizon: int,
                   budget: int = DEFAULT_ATOM_BUDGET) -> JointTable:
    """The exact joint P(u^N, y^N | s_0) with axes (u1..uN, y1..yN).

    Built by the forward recursion over the channel state, so each increment
    multiplies the running table by the step conditional and the kernel.
    """
    nu, ny, ns = ch.nu, ch.ny, ch.ns
    if ccd.horizon < horizon or ccd.nu != nu or ccd.ny != ny:
        raise DimensionMismatch("causal conditioning does not match the channel/horizon")
    if not 0 <= s0 < ns:
        raise DimensionMismatch(f"s0 = {s0} outside state alphabet of size {ns}")
    atoms = (nu * ny) ** horizon * ns
    if atoms > budget:
        raise BudgetExceeded(f"{atoms} joint atoms exceed the budget {budget}")

    # alpha[u1..ui, y1..yi, s_i] = P(u^i, y^i, s_i | s0)
    alpha = np.zeros(ns)
    alpha[s0] = 1.0
    for i in range(1, horizon + 1):
        step = ccd.steps[i - 1]  # (..., u_i)
        # extend: (u1..u_{i-1}, y1..y_{i-1}, s_{i-1}, u_i)
        ext = alpha[..., None] * step.reshape(step.shape[:-1] + (1, nu))
        # kernel[y, s+, u, s]: contract s_{i-1}, emit (y_i, s_i)
        alpha = np.einsum("...su,ytus->...uyt", ext, ch.kernel, optimize=True)
        # axes now: u1..u_{i-1}, y1..y_{i-1}, u_i, y_i, s_i -> move u_i home
        alpha = np.moveaxis(alpha, -3, i - 1)
    joint = alpha.sum(axis=-1)
    u_names, y_names = _axis_names(horizon)
    total = joint.sum()
    if abs(total - 1.0) > 1e-9:
        raise NotAPmf(f"unrolled joint sums to {total:.12g}")
    return JointTable(axes=tuple(u_names + y_names), probs=joint / total)


def directed_info(ch: InducedChannel, ccd: CausalConditioning, s0: int, horizon: int,
                  budget: int = DEFAULT_ATOM_BUDGET) -> float:
    """I(U^N -> Y^N | s_0) = sum_i I(U^i; Y_i | Y^{i-1}, s_0), exactly.

    Implemented as a sum of conditional_mi terms on the single unrolled joint,
    so the chain-rule identity against those terms is exact by construction.
    """
    joint = unrolled_joint(ch, ccd, s0, horizon, budget=budget)
    return sum(directed_info_terms(joint, horizon))


def directed_info_terms(joint: JointTable, horizon: int) -> list[float]:
    """The per-step terms I(U^i; Y_i | Y^{i-1}) of the directed information."""
    u_names, y_names = _axis_names(horizon)
    return [
        conditional_mi(joint, u_names[:i], [y_names[i - 1]], y_names[:i - 1])
        for i in range(1, horizon + 1)
    ]
