"""Scratch: verify derived Q-graph fixtures against the closed forms."""
import sys
sys.path.insert(0, "src")
import math
import numpy as np

from fscap import channels as ch
from fscap import qgraph as qg
from fscap import presets as pre
from fscap.infomeasures import binary_entropy

np.set_printoptions(precision=12, suppress=True)

print("=== trapdoor ===")
setup = pre.trapdoor_setup()
chain = qg.build_suq_chain(setup.channel, setup.graph, setup.policy)
print("unique:", chain.unique, "aperiodic:", chain.aperiodic)
pi3 = chain.stationary.reshape(2, 2, 4)  # (s, u, q)
piq = pi3.sum(axis=(0, 1))
b1, b2, b3, b4 = pre.B1, pre.B2, pre.B3, pre.B4
mu_expected = np.array([b2, 1, b2, 1]) / (b4 + 2)
print("piq:", piq, "expected:", mu_expected, "maxdiff", np.abs(piq - mu_expected).max())
# conditionals pi(u,s|q) in paper order [(0,0),(1,0),(0,1),(1,1)]
expected_cond = {
    0: [0, b2, b3, 0],
    1: [0, b1, b4, 0],
    2: [b3, 0, 0, b2],
    3: [b4, 0, 0, b1],
}
for q in range(4):
    cond = np.array([pi3[0, 0, q], pi3[0, 1, q], pi3[1, 0, q], pi3[1, 1, q]]) / piq[q]
    print(f"q={q} cond:", cond, "diff", np.abs(cond - expected_cond[q]).max())
res = qg.qgraph_bound(setup.channel, setup.graph, setup.policy)
print("rate:", res.rate, "target:", pre.GOLDEN_RATIO_RATE, "diff:", abs(res.rate - pre.GOLDEN_RATIO_RATE))
print("violation:", res.bcjr_violation)
print("rewards:", res.per_node_rewards)
print("expected rewards:", 1 - b2 * b3, binary_entropy(b2 * (b3 + 1)) - b2 * b4)

print()
print("=== ising ===")
for a in (0.2, 0.45, 0.7):
    setup = pre.ising_setup(a)
    res = qg.qgraph_bound(setup.channel, setup.graph, setup.policy)
    target = pre.ising_rate(a)
    mu_exp = np.array([(a + 1) / (2 * (a + 3)), 1 / (a + 3), (a + 1) / (2 * (a + 3)), 1 / (a + 3)])
    r13 = binary_entropy(2 * a / (a + 1))
    r24 = binary_entropy((a + 1) / 2) + a - 1
    print(f"a={a}: rate={res.rate:.12f} target={target:.12f} diff={abs(res.rate-target):.2e} "
          f"viol={res.bcjr_violation:.2e}")
    print("   weights diff:", np.abs(res.node_weights - mu_exp).max(),
          "rewards diff:", np.abs(res.per_node_rewards - [r13, r24, r13, r24]).max())

print()
print("=== bec ===")
eps, p = 0.5, 0.4
setup = pre.bec_setup(eps, p)
res = qg.qgraph_bound(setup.channel, setup.graph, setup.policy)
target = pre.bec_rate(eps, p)
print(f"rate={res.rate:.12f} target={target:.12f} diff={abs(res.rate-target):.2e} viol={res.bcjr_violation:.2e}")
mu_exp = np.array([p * (1 - eps), (1 - eps), eps]) / (1 + p * (1 - eps))
print("weights:", res.node_weights, "expected:", mu_exp)

print()
print("=== zs look-ahead ===")
for alpha, beta in ((4 / 7, 0.0), (3 / 7, 1.0)):
    setup = pre.lookahead_setup(alpha, beta)
    chain = qg.build_suq_chain(setup.channel, setup.graph, setup.policy)
    print("unique:", chain.unique, "aperiodic:", chain.aperiodic)
    res = qg.qgraph_bound(setup.channel, setup.graph, setup.policy)
    target = pre.lookahead_rate()
    print(f"alpha={alpha:.4f} beta={beta}: rate={res.rate:.12f} target={target:.12f} "
          f"diff={abs(res.rate-target):.2e} viol={res.bcjr_violation:.2e}")
    # paper's pi(u, s~ | Q=1) at alpha=4/7: rows u=0: 7/64, u=3: 1/64
    pi3 = chain.stationary.reshape(4, 4, 2)  # (s, u, q)
    piq = pi3.sum(axis=(0, 1))
    condq1 = (pi3[:, :, 0] / piq[0]).T  # (u, s)
    print("  pi(u,s|Q=1):")
    print(condq1)

print()
print("=== noisy ising (2-node) vs analytic ===")
def noisy_root(eta):
    if abs(eta - 0.5) < 1e-14:
        return 1.0 / 3.0
    A = 2 - 5 * eta + 2 * eta ** 2
    B = (5 - 4 * eta) * eta
    C = -2 * (1 - eta) * eta
    return (-B + math.sqrt(B * B - 4 * A * C)) / (2 * A)

def analytic(eta):
    a = noisy_root(eta)
    abar, ebar = 1 - a, 1 - eta
    den = a - 2 * a * eta + 2
    return (binary_entropy((2 - eta) * (a * ebar + eta) / den)
            - (2 - a * eta - a) / den * binary_entropy(eta / 2)
            - a * (2 - eta) / den * binary_entropy(ebar / 2))

for eta in (0.1, 0.2, 0.3, 0.4, 0.5):
    a = noisy_root(eta)
    resid = (2 - 5 * eta + 2 * eta ** 2) * a * a + (5 - 4 * eta) * eta * a - 2 * (1 - eta) * eta
    setup = pre.noisy_ising_setup(eta, a)
    res = qg.qgraph_bound(setup.channel, setup.graph, setup.policy)
    an = analytic(eta)
    print(f"eta={eta}: a={a:.9f} resid={resid:.2e} qbound={res.rate:.9f} analytic={an:.9f} "
          f"diff={abs(res.rate-an):.2e} viol={res.bcjr_violation:.2e}")
print("analytic(0.5) target", 1 - binary_entropy(0.25))

print()
print("=== golden ratio identity ===")
lhs = 2 * (b2 / (b4 + 2)) * (1 - b2 * b3) + 2 * (1 / (b4 + 2)) * (binary_entropy(b2 * (b3 + 1)) - b2 * b4)
print("identity diff:", abs(lhs - pre.GOLDEN_RATIO_RATE))
print("node2 reward value:", binary_entropy(b2 * (b3 + 1)) - b2 * b4)
