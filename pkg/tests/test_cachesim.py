import json

import numpy as np
import pytest

from solek import cachesim as cs
from solek.errors import CatalogError, ConfigError, WrongContext
from solek import protocol as pr

SMALL = {"catalog": {"n_items": 50, "zipf_alpha": 0.8, "item_size_bytes": 32}, "capacity_items": 10, "n_requests": 400}

TWO_NODES = {
    "nodes": ["edge-0", "edge-1"],
    "neighbors": {"edge-0": ["edge-1"], "edge-1": ["edge-0"]},
    "n_users": 2,
}


def _sim(**overrides):
    d = {"catalog": {"n_items": 20, "item_size_bytes": 16}, "capacity_items": 5, "n_requests": 10} | overrides
    return cs.EdgeCacheSim(cs.SimConfig.from_dict(d))


def _req(tick, user, index, attacker=False):
    return cs.RequestEvent(tick, user, f"item-{index + 1:06d}", attacker)


def test_cold_cache_miss_then_hit():
    sim = _sim()
    assert sim.step(_req(0, "user-0", 3)) is cs.Outcome.MISS
    assert sim.step(_req(1, "user-0", 3)) is cs.Outcome.HIT
    assert sim.metrics.crypto_calls["encrypt"] == 1
    assert sim.metrics.crypto_calls["decrypt"] == 2


def test_neighbor_hit_delivers_plaintext_via_re_encryption():
    sim = _sim(topology=TWO_NODES)
    assert sim.location == {"user-0": "edge-0", "user-1": "edge-1", cs.ATTACKER_USER: "edge-0"}
    assert sim.step(_req(0, "user-0", 2)) is cs.Outcome.MISS
    assert sim.step(_req(1, "user-1", 2)) is cs.Outcome.NEIGHBOR_HIT
    calls = sim.metrics.crypto_calls
    assert calls["rekey_gen"] == calls["re_encrypt"] == calls["re_decrypt"] == 1
    # the copy now cached at edge-1 is still addressed to edge-0, so it is re-encrypted again
    assert sim.step(_req(2, "user-1", 2)) is cs.Outcome.HIT
    assert calls["re_decrypt"] == 2


def test_capacity_one_alternating_is_all_misses():
    sim = _sim(capacity_items=1)
    outcomes = [sim.step(_req(t, "user-0", t % 2)) for t in range(20)]
    assert set(outcomes) == {cs.Outcome.MISS}


def test_zero_capacity_serves_but_never_caches():
    sim = _sim(capacity_items=0)
    assert [sim.step(_req(t, "user-0", 1)) for t in range(3)] == [cs.Outcome.MISS] * 3


def test_ue_move_then_rollover_invalidates_old_key():
    sim = _sim(topology=TWO_NODES)
    old = sim.credential("user-0", "svc-0")
    sim.ue_move("user-0", "edge-1", 0)
    assert sim.location["user-0"] == "edge-1" and sim.metrics.moves == 1
    moved = sim.credential("user-0", "svc-0")
    assert moved.edge_id == b"edge-1"
    sim.rollover(2)
    ct = sim._origin_encrypt(4, "edge-1")
    assert ct.epoch == 2
    with pytest.raises(WrongContext):
        pr.decrypt(sim.params, moved, ct)
    with pytest.raises(WrongContext):
        pr.decrypt(sim.params, old, ct)
    assert pr.decrypt(sim.params, sim.credential("user-0", "svc-0"), ct) == sim.content(4)


def test_stale_epoch_entries_are_misses():
    sim = _sim(topology=TWO_NODES | {"epoch_length": 5})
    assert sim.step(_req(0, "user-0", 1)) is cs.Outcome.MISS
    assert sim.step(_req(1, "user-0", 1)) is cs.Outcome.HIT
    assert sim.step(_req(5, "user-0", 1)) is cs.Outcome.MISS
    assert sim.metrics.rollovers == 1


def test_mobility_keeps_deliveries_correct():
    cfg = SMALL | {"topology": TWO_NODES | {"mobility_rate": 0.2, "epoch_length": 100}}
    m = cs.run(cfg)
    assert m.moves > 0 and m.neighbor_hits > 0 and m.rollovers == 3
    m.check()


def test_lru_and_lfu_eviction():
    lru = cs.Cache(3, "lru")
    for t, k in enumerate("abc"):
        lru.put(k, k, 1, t)
    lru.get("a", 3)
    assert lru.put("d", "d", 1, 4) == ["b"]

    lfu = cs.Cache(3, "lfu")
    for t, k in enumerate("abc"):
        lfu.put(k, k, 1, t)
    lfu.get("a", 3)
    lfu.get("b", 4)
    assert lfu.put("d", "d", 1, 5) == ["c"]
    # tie on frequency: the one accessed longest ago goes
    lfu.get("d", 6)
    assert lfu.put("e", "e", 1, 7) == ["a"]
    assert lfu.used_bytes == 3 and len(lfu) == 3


def test_cache_rejects_oversized_and_unknown_policy():
    c = cs.Cache(10)
    assert c.put("big", 0, 11, 0) == [] and "big" not in c
    with pytest.raises(ConfigError):
        cs.Cache(10, "fifo")


def test_zipf_rank_one_frequency():
    cat = cs.Catalog(n_items=1000, zipf_alpha=0.8)
    events = cs.build_workload(cat, 100_000, seed=0)
    count = sum(e.m_id == "item-000001" for e in events)
    expected = 100_000 * cat.weights()[0]
    assert abs(count - expected) <= 0.1 * expected


def test_small_alpha_is_near_uniform():
    cat = cs.Catalog(n_items=10, zipf_alpha=1e-9)
    events = cs.build_workload(cat, 20_000, seed=1)
    counts = np.bincount([cat.index_of(e.m_id) for e in events], minlength=10)
    assert np.all(np.abs(counts - 2000) < 200)


def test_workload_attack_modes():
    cat = cs.Catalog(n_items=100)
    spec = cs.pollution_attack("locality-disruption", 1.0, cat, target_set_size=5)
    events = cs.build_workload(cat, 12, 0, spec)
    assert [cat.index_of(e.m_id) for e in events] == [95, 96, 97, 98, 99] * 2 + [95, 96]
    assert all(e.attacker and e.user == cs.ATTACKER_USER for e in events)
    spec = cs.pollution_attack("false-locality", 0.5, cat, target_set_size=5)
    events = cs.build_workload(cat, 2000, 0, spec)
    attack = [e for e in events if e.attacker]
    assert 900 < len(attack) < 1100
    assert {cat.index_of(e.m_id) for e in attack} == set(range(95, 100))


def test_rate_zero_attack_matches_baseline():
    base = cs.run(SMALL)
    spec = {"mode": "false-locality", "rate": 0.0, "target_set_size": 5}
    attacked = cs.run(SMALL | {"attack": spec})
    assert (attacked.hits, attacked.neighbor_hits, attacked.misses) == (base.hits, base.neighbor_hits, base.misses)
    assert attacked.legit == base.legit


def test_determinism_and_seed_sensitivity():
    a, b = cs.run(SMALL | {"seed": 4}), cs.run(SMALL | {"seed": 4})
    assert a.to_json() == b.to_json()
    assert cs.run(SMALL | {"seed": 5}).to_json() != a.to_json()


def test_hit_rate_rises_with_capacity():
    rates = [cs.run(SMALL | {"capacity_items": c}).hit_rate for c in (1, 5, 20, 50)]
    assert rates == sorted(rates) and rates[-1] > rates[0]


def test_locality_disruption_attacker_rarely_hits():
    # a 500-item sweep through a 10-item cache only hits what legit users happened to pull in
    cfg = SMALL | {
        "catalog": {"n_items": 1000, "item_size_bytes": 32},
        "attack": {"mode": "locality-disruption", "rate": 0.3, "target_set_size": 500},
    }
    m = cs.run(cfg)
    assert m.attacker.requests > 50
    assert m.attacker.hit_rate < 0.02


def test_metrics_outputs():
    m = cs.run(SMALL)
    d = json.loads(m.to_json())
    assert d["requests"] == 400 and d["config_hash"] == cs.SimConfig.from_dict(SMALL).config_hash()
    assert d["hit_rate"] == pytest.approx((m.hits + m.neighbor_hits) / 400)
    assert d["origin_bytes"] > 0 and d["scalar_muls"] == m.ops.scalar_mul_count
    lines = cs.metrics_csv([m]).splitlines()
    assert lines[0].split(",") == list(cs.METRICS_CSV_COLUMNS) and len(lines) == 2


def test_origin_bytes_counts_serialized_ciphertexts():
    m = cs.run(SMALL | {"capacity_items": 0, "n_requests": 10})
    # preamble, three ids, epoch, E1, E2, length, nonce and tag, 32-byte payload
    per_item = 6 + (2 + 5) + (2 + 6) + (2 + 11) + 8 + 2 + 32 + 4 + 28 + 32
    assert m.origin_bytes == 10 * per_item


@pytest.mark.parametrize(
    "bad",
    [
        {"capacity_items": -1},
        {"policy": "fifo"},
        {"n_requests": 0},
        {"seed": -3},
        {"catalog": {"zipf_alpha": 0}},
        {"catalog": {"n_items": 0}},
        {"catalog": {"colour": 1}},
        {"attack": {"mode": "flood", "rate": 0.1, "target_set_size": 3}},
        {"attack": {"mode": "false-locality", "rate": 1.5, "target_set_size": 3}},
        {"attack": {"mode": "false-locality", "rate": 0.5, "target_set_size": 5000}},
        {"topology": {"nodes": ["a", "b"], "neighbors": {"a": ["b"]}}},
        {"topology": {"nodes": []}},
        {"latency_units": {"hit": -1}},
        {"warmup_requests": 10**9},
        {"profile": "p256"},
        {"mystery": True},
    ],
)
def test_config_errors(bad):
    with pytest.raises(ConfigError):
        cs.SimConfig.from_dict(SMALL | bad)


def test_catalog_lookup_errors():
    cat = cs.Catalog(n_items=10)
    assert cat.index_of(cat.item_id(9)) == 9
    for bad in ("item-000011", "item-0", "nope", "item-000000"):
        with pytest.raises(CatalogError):
            cat.index_of(bad)


def test_load_config(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(SMALL))
    assert cs.load_config(path).n_requests == 400
    path.write_text("[1]")
    with pytest.raises(ConfigError):
        cs.load_config(path)
    path.write_text("{")
    with pytest.raises(ConfigError):
        cs.load_config(path)
