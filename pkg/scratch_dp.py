import sys, time
sys.path.insert(0, "src")
import numpy as np
from fscap import channels as ch
from fscap import presets as pre
from fscap.beliefdp import (BeliefGrid, bcjr_update, dp_reward, output_marginal,
                            predicted_belief, simulate_grid_policy, value_iteration)

# --- grid sanity
g = BeliefGrid(4, 16)
assert np.all(g.index_of(g.points) == np.arange(g.size)), "rank mismatch"
idx = g.project(g.fractions)
assert np.all(idx == np.arange(g.size)), "projection of grid points must be identity"
rng = np.random.default_rng(1)
w = rng.dirichlet(np.ones(4), size=2000)
pi = g.project(w)
# oracle: nearest by L1 among all grid points
d = np.abs(w[:, None, :] - g.fractions[None, :, :]).sum(axis=2)
best = d[np.arange(2000), pi]
assert np.all(best <= d.min(axis=1) + 1e-12), "projection not L1-nearest"
print("grid ok; size(16,4) =", g.size)

# --- trapdoor fixture: bcjr maps node beliefs per the graph
setup = pre.trapdoor_setup()
chn = setup.channel
b1, b2, b3, b4 = pre.B1, pre.B2, pre.B3, pre.B4
beliefs = {
    0: np.array([[0.0, b3], [b2, 0.0]]),   # beta[u, s]: node 1
    1: np.array([[0.0, b4], [b1, 0.0]]),
    2: np.array([[b3, 0.0], [0.0, b2]]),
    3: np.array([[b4, 0.0], [0.0, b1]]),
}
a = setup.policy[0]
gmap = {(0, 0): 3, (0, 1): 1, (1, 0): 2, (1, 1): 1, (2, 0): 3, (2, 1): 1, (3, 0): 3, (3, 1): 0}
for (q, y), q2 in gmap.items():
    post = bcjr_update(beliefs[q], a, y, chn)
    print(f"node {q} y={y}: maps to node {q2}, err {np.abs(post - beliefs[q2]).max():.2e}")
print("reward node0:", dp_reward(beliefs[0], a, chn), "expected", 1 - b2 * b3)
print("reward node1:", dp_reward(beliefs[1], a, chn), "expected", 0.6676226607221134)

# consistency: sum_y p(y) * posterior == predicted
rng = np.random.default_rng(2)
worst = 0.0
for _ in range(50):
    b = rng.dirichlet(np.ones(4)).reshape(2, 2)
    act = rng.dirichlet(np.ones(2), size=2)
    pred = predicted_belief(b, act, chn)
    mix = np.zeros((2, 2))
    py = output_marginal(b, act, chn)
    for y in range(2):
        if py[y] > 1e-12:
            mix += py[y] * bcjr_update(b, act, y, chn)
    worst = max(worst, np.abs(mix - pred).max())
print("total probability worst err:", worst)

# --- small value iteration run (trapdoor)
for res in (16, 32, 64):
    t0 = time.time()
    sol = value_iteration(chn, grid_res=res, action_res=4, tol=1e-4)
    dt = time.time() - t0
    print(f"grid {res}: rate={sol.rate:.6f} (target 0.694242) span={sol.residual_span:.2e} "
          f"iters={sol.iterations} conv={sol.converged} time={dt:.1f}s")
