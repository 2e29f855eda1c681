import sys
sys.path.insert(0, "src")
import numpy as np
from fscap import channels as ch
from fscap.infomeasures import (CausalConditioning, JointTable, binary_entropy,
                                conditional_mi, directed_info, directed_info_terms,
                                entropy, unrolled_joint)

print("H(1/4):", entropy([0.25, 0.75]), "1-H(1/4):", 1 - entropy([0.25, 0.75]))

# identity channel: y = u, 1 state
k = np.zeros((2, 1, 2, 1))
k[0, 0, 0, 0] = 1.0
k[1, 0, 1, 0] = 1.0
ident = ch.InducedChannel(nu=2, ns=1, ny=2, kernel=k)
ccd = CausalConditioning.iid_uniform(2, 2, 3)
print("identity N=3 DI:", directed_info(ident, ccd, 0, 3))

# N=1 equals conditional MI on one-step joint
fsc = ch.builtin_channel("zs_iid_dmc")
strat = ch.enumerate_strategies(2, 2)
ind = ch.induce_strategy_channel(fsc, strat)
ccd1 = CausalConditioning.iid_uniform(4, 2, 1)
di = directed_info(ind, ccd1, 0, 1)
J = unrolled_joint(ind, ccd1, 0, 1)
cmi = conditional_mi(J, ["u1"], ["y1"])
print("N=1 DI:", di, "cond MI:", cmi, "diff:", abs(di - cmi))

# brute-force oracle over (u, y) atoms at s0 = 0
law = ind.output_law()  # (y, u, s)
atoms = np.zeros((4, 2))
for u in range(4):
    for y in range(2):
        atoms[u, y] = 0.25 * law[y, u, 0]
py = atoms.sum(axis=0)
oracle = sum(atoms[u, y] * np.log2(atoms[u, y] / (0.25 * py[y]))
             for u in range(4) for y in range(2) if atoms[u, y] > 0)
print("oracle:", oracle, "diff:", abs(di - oracle))

# chain rule at N=3 trapdoor
fsc = ch.builtin_channel("trapdoor")
ind2 = ch.induce_strategy_channel(fsc, ch.strategy_table(2, 2, [[0, 1], [1, 0]]))
rng = np.random.default_rng(0)
steps = []
for i in range(1, 4):
    shape = (2,) * (i - 1) + (2,) * (i - 1) + (2,)
    t = rng.random(shape) + 0.1
    t /= t.sum(axis=-1, keepdims=True)
    steps.append(t)
ccd3 = CausalConditioning(2, 2, tuple(steps))
di3 = directed_info(ind2, ccd3, 0, 3)
J3 = unrolled_joint(ind2, ccd3, 0, 3)
terms = directed_info_terms(J3, 3)
print("N=3 DI:", di3, "sum terms:", sum(terms), "exact equal:", di3 == sum(terms))
print("terms:", terms)
print("bounds ok:", 0 <= di3 <= 3)
