"""
Cache pollution at the edge
===========================

An attacker requests unpopular items to push popular ones out of the cache.
False locality pins a small unpopular set; locality disruption sweeps
through a large one.
"""

import numpy as np

from solek import cachesim

base = {
    "catalog": {"n_items": 1000, "zipf_alpha": 0.8, "item_size_bytes": 64},
    "capacity_items": 100,
    "n_requests": 10_000,
    "warmup_requests": 1_000,
}

# %%
# Seed-paired comparison: each seed gives the same legitimate stream with
# and without the attack, so the difference is the attack's effect alone.
attacks = {
    "false-locality": {"mode": "false-locality", "rate": 0.5, "target_set_size": 50},
    "locality-disruption": {"mode": "locality-disruption", "rate": 0.5, "target_set_size": 500},
}
clean = np.array([cachesim.run(base | {"seed": s}).legit.hit_rate for s in range(5)])
print("no attack            legit hit rate", clean.round(3))
for name, spec in attacks.items():
    runs = [cachesim.run(base | {"seed": s, "attack": spec}) for s in range(5)]
    legit = np.array([m.legit.hit_rate for m in runs])
    own = np.mean([m.attacker.hit_rate for m in runs])
    print(f"{name:<21}legit hit rate {legit.round(3)}  drop {np.mean(clean - legit):.3f}  attacker hit rate {own:.3f}")

# %%
# LFU resists the sweep better than LRU because swept items are seen once.
for policy in ("lru", "lfu"):
    m = cachesim.run(base | {"policy": policy, "attack": attacks["locality-disruption"]})
    print(policy, "legit hit rate under locality disruption:", round(m.legit.hit_rate, 3))
