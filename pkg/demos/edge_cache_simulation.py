"""
Edge cache hit rate against the Che approximation
=================================================

An LRU edge cache serves a Zipf request stream. Every request runs the real
protocol (on the small toy group, for speed), and the measured hit rate is
compared with the analytic characteristic-time estimate.
"""

import numpy as np
from scipy.optimize import brentq

from solek import cachesim

# %%
# The Che approximation: find T with sum(1 - exp(-p_i T)) = C.
def che(alpha, n, capacity):
    p = np.arange(1, n + 1, dtype=float) ** -alpha
    p /= p.sum()
    t = brentq(lambda t: np.sum(1 - np.exp(-p * t)) - capacity, 1e-9, 1e9)
    return np.sum(p * (1 - np.exp(-p * t)))


# %%
# Sweep the cache size; 20 000 requests per point keeps this under a minute.
base = {
    "catalog": {"n_items": 1000, "zipf_alpha": 0.8, "item_size_bytes": 64},
    "n_requests": 20_000,
    "warmup_requests": 2_000,
}
print(f"{'capacity':>8} {'simulated':>10} {'che':>8}")
for capacity in (10, 50, 100, 200, 400):
    m = cachesim.run(base | {"capacity_items": capacity})
    print(f"{capacity:8d} {m.post_warmup.hit_rate:10.4f} {che(0.8, 1000, capacity):8.4f}")

# %%
# Two neighbouring nodes with moving users: some requests are now served by
# the neighbour through re-encryption.
two = {
    "nodes": ["edge-0", "edge-1"],
    "neighbors": {"edge-0": ["edge-1"], "edge-1": ["edge-0"]},
    "n_users": 8,
    "mobility_rate": 0.05,
    "epoch_length": 5_000,
}
m = cachesim.run(base | {"capacity_items": 100, "topology": two})
print(m.to_json())
