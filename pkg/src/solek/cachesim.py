"""Deterministic edge-cache simulator driving the real protocol.

Users request catalogue items from the edge node covering them. Each request
ends in one of three outcomes:

* ``HIT`` -- the local cache holds the item's first-level ciphertext;
* ``NEIGHBOR_HIT`` -- a neighbouring node holds it, re-encrypts it toward the
  user's area, and the first-level ciphertext is also cached locally;
* ``MISS`` -- the origin encrypts the item for the user's (service, area,
  time slot) and the result is cached locally.

Every delivery is decrypted by the simulated user and compared with the
catalogue plaintext. A cached ciphertext addressed to another area (left by
a neighbour hit or by a user who moved) is re-encrypted on the way out, with
the addressed node generating the re-encryption key.

Caching is reactive, whole-item, and bounded in bytes of plaintext. Items
larger than a node's capacity are served but never cached.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import io
import json
import random
from collections import OrderedDict
from dataclasses import asdict, dataclass, field

import numpy as np

from . import protocol as pr
from . import wire
from .errors import CatalogError, ConfigError
from .group import OpCounter, get_profile

METRICS_CSV_COLUMNS = (
    "config_hash",
    "hits",
    "neighbor_hits",
    "misses",
    "hit_rate",
    "legit_hit_rate",
    "attacker_hit_rate",
    "origin_bytes",
    "scalar_muls",
    "mean_latency",
)

CRYPTO_ALGORITHMS = ("encrypt", "decrypt", "rekey_gen", "re_encrypt", "re_decrypt")
ATTACK_MODES = ("false-locality", "locality-disruption")
POLICIES = ("lru", "lfu")
DEFAULT_LATENCY = {"hit": 1.0, "neighbor": 3.0, "miss": 10.0}


class Outcome(enum.Enum):
    HIT = "hit"
    NEIGHBOR_HIT = "neighbor_hit"
    MISS = "miss"


_LATENCY_KEY = {Outcome.HIT: "hit", Outcome.NEIGHBOR_HIT: "neighbor", Outcome.MISS: "miss"}


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class Topology:
    """Edge nodes, their symmetric neighbour relation, and user coverage."""

    nodes: tuple[str, ...] = ("edge-0",)
    neighbors: dict[str, tuple[str, ...]] = field(default_factory=dict)
    n_users: int = 8
    coverage: dict[str, str] = field(default_factory=dict)
    mobility_rate: float = 0.0
    epoch_length: int = 0

    @property
    def users(self) -> list[str]:
        return [f"user-{k}" for k in range(self.n_users)]

    def neighbors_of(self, node: str) -> tuple[str, ...]:
        return self.neighbors.get(node, ())

    def initial_node(self, user: str) -> str:
        if user in self.coverage:
            return self.coverage[user]
        k = int(user.rsplit("-", 1)[1])
        return self.nodes[k % len(self.nodes)]

    @classmethod
    def from_dict(cls, d: dict) -> "Topology":
        nodes = tuple(d.get("nodes", ["edge-0"]))
        if not nodes or len(set(nodes)) != len(nodes):
            raise ConfigError("topology.nodes must be a nonempty list of distinct ids")
        raw = d.get("neighbors", {})
        neighbors = {}
        for node, adj in raw.items():
            if node not in nodes:
                raise ConfigError(f"topology.neighbors: unknown node {node!r}")
            for other in adj:
                if other not in nodes or other == node:
                    raise ConfigError(f"topology.neighbors[{node!r}]: bad neighbour {other!r}")
                if node not in raw.get(other, ()):
                    raise ConfigError(f"topology.neighbors: {node!r}-{other!r} is not symmetric")
            neighbors[node] = tuple(sorted(adj))
        n_users = d.get("n_users", 8)
        if not isinstance(n_users, int) or n_users < 1:
            raise ConfigError("topology.n_users must be a positive integer")
        coverage = dict(d.get("coverage", {}))
        for user, node in coverage.items():
            if node not in nodes:
                raise ConfigError(f"topology.coverage[{user!r}]: unknown node {node!r}")
        mobility = d.get("mobility_rate", 0.0)
        if not 0.0 <= mobility <= 1.0:
            raise ConfigError("topology.mobility_rate must be in [0, 1]")
        epoch_length = d.get("epoch_length", 0)
        if not isinstance(epoch_length, int) or epoch_length < 0:
            raise ConfigError("topology.epoch_length must be a non-negative integer")
        return cls(nodes, neighbors, n_users, coverage, mobility, epoch_length)

    def to_dict(self) -> dict:
        return {
            "nodes": list(self.nodes),
            "neighbors": {k: list(v) for k, v in sorted(self.neighbors.items())},
            "n_users": self.n_users,
            "coverage": dict(sorted(self.coverage.items())),
            "mobility_rate": self.mobility_rate,
            "epoch_length": self.epoch_length,
        }


@dataclass(frozen=True)
class Catalog:
    """Items ranked by popularity; rank 1 is the most requested."""

    n_items: int = 1000
    zipf_alpha: float = 0.8
    item_size_bytes: int = 1024
    n_services: int = 1

    def __post_init__(self):
        if not isinstance(self.n_items, int) or self.n_items < 1:
            raise ConfigError("catalog.n_items must be a positive integer")
        if not self.zipf_alpha > 0:
            raise ConfigError("catalog.zipf_alpha must be > 0")
        if not isinstance(self.item_size_bytes, int) or self.item_size_bytes < 1:
            raise ConfigError("catalog.item_size_bytes must be a positive integer")
        if not isinstance(self.n_services, int) or self.n_services < 1:
            raise ConfigError("catalog.n_services must be a positive integer")

    def item_id(self, index: int) -> str:
        """Content id for the item at 0-based popularity index."""
        return f"item-{index + 1:06d}"

    def index_of(self, m_id: str) -> int:
        try:
            index = int(m_id.rsplit("-", 1)[1]) - 1
        except (IndexError, ValueError):
            raise CatalogError(m_id) from None
        if not 0 <= index < self.n_items or self.item_id(index) != m_id:
            raise CatalogError(m_id)
        return index

    def service_of(self, index: int) -> str:
        return f"svc-{index % self.n_services}"

    def weights(self) -> np.ndarray:
        w = np.arange(1, self.n_items + 1, dtype=float) ** -self.zipf_alpha
        return w / w.sum()

    def content(self, index: int, seed: int) -> bytes:
        return random.Random(f"{seed}:{index}").randbytes(self.item_size_bytes)

    @property
    def total_bytes(self) -> int:
        return self.n_items * self.item_size_bytes


@dataclass(frozen=True)
class AttackSpec:
    mode: str
    rate: float
    target_items: tuple[int, ...]
    node: str | None = None

    def to_dict(self) -> dict:
        return {"mode": self.mode, "rate": self.rate, "target_items": list(self.target_items), "node": self.node}


def pollution_attack(
    mode: str,
    rate: float,
    catalog: Catalog,
    target_set_size: int | None = None,
    target_items=None,
    node: str | None = None,
) -> AttackSpec:
    """Describe a cache pollution attack.

    ``false-locality`` keeps requesting a fixed unpopular set so it stays
    cached; ``locality-disruption`` sweeps through unpopular items in order so
    each request brings in something new. By default the target set is the
    ``target_set_size`` least popular items.
    """
    if mode not in ATTACK_MODES:
        raise ConfigError(f"attack.mode must be one of {ATTACK_MODES}")
    if not 0.0 <= rate <= 1.0:
        raise ConfigError("attack.rate must be in [0, 1]")
    if target_items is None:
        if not target_set_size or target_set_size < 1:
            raise ConfigError("attack.target_set_size must be a positive integer")
        if target_set_size > catalog.n_items:
            raise ConfigError("attack.target_set_size exceeds catalog.n_items")
        target_items = range(catalog.n_items - target_set_size, catalog.n_items)
    targets = tuple(int(i) for i in target_items)
    if not targets:
        raise ConfigError("attack target set is empty")
    if any(not 0 <= i < catalog.n_items for i in targets):
        raise ConfigError("attack target set references items outside the catalog")
    return AttackSpec(mode, float(rate), targets, node)


@dataclass(frozen=True)
class SimConfig:
    topology: Topology = field(default_factory=Topology)
    catalog: Catalog = field(default_factory=Catalog)
    capacity_items: int = 100
    policy: str = "lru"
    n_requests: int = 10_000
    seed: int = 0
    attack: AttackSpec | None = None
    latency_units: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_LATENCY))
    warmup_requests: int = 0
    profile: str = "toy"

    @property
    def capacity_bytes(self) -> int:
        return self.capacity_items * self.catalog.item_size_bytes

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        known = {
            "topology", "catalog", "capacity_items", "policy", "n_requests", "seed",
            "attack", "latency_units", "warmup_requests", "profile",
        }
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        topology = Topology.from_dict(d.get("topology", {}))
        cat = d.get("catalog", {})
        bad = set(cat) - {"n_items", "zipf_alpha", "item_size_bytes", "n_services"}
        if bad:
            raise ConfigError(f"unknown catalog fields: {sorted(bad)}")
        catalog = Catalog(**cat)
        capacity = d.get("capacity_items", 100)
        if not isinstance(capacity, int) or capacity < 0:
            raise ConfigError("capacity_items must be a non-negative integer")
        policy = str(d.get("policy", "lru")).lower()
        if policy not in POLICIES:
            raise ConfigError(f"policy must be one of {POLICIES}")
        n_requests = d.get("n_requests", 10_000)
        if not isinstance(n_requests, int) or n_requests < 1:
            raise ConfigError("n_requests must be a positive integer")
        seed = d.get("seed", 0)
        if not isinstance(seed, int) or seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        attack = None
        if d.get("attack"):
            a = d["attack"]
            node = a.get("node")
            if node is not None and node not in topology.nodes:
                raise ConfigError(f"attack.node: unknown node {node!r}")
            attack = pollution_attack(
                a.get("mode"),
                a.get("rate", 0.0),
                catalog,
                target_set_size=a.get("target_set_size"),
                target_items=a.get("target_items"),
                node=node,
            )
        latency = dict(DEFAULT_LATENCY)
        for k, v in d.get("latency_units", {}).items():
            if k not in DEFAULT_LATENCY:
                raise ConfigError(f"latency_units.{k} is not one of {sorted(DEFAULT_LATENCY)}")
            if not v >= 0:
                raise ConfigError(f"latency_units.{k} must be non-negative")
            latency[k] = float(v)
        warmup = d.get("warmup_requests", 0)
        if not isinstance(warmup, int) or not 0 <= warmup < n_requests:
            raise ConfigError("warmup_requests must be in [0, n_requests)")
        profile = d.get("profile", "toy")
        try:
            get_profile(profile)
        except Exception:
            raise ConfigError(f"profile must be one of 'default', 'toy'; got {profile!r}") from None
        return cls(topology, catalog, capacity, policy, n_requests, seed, attack, latency, warmup, profile)

    def to_dict(self) -> dict:
        return {
            "topology": self.topology.to_dict(),
            "catalog": asdict(self.catalog),
            "capacity_items": self.capacity_items,
            "policy": self.policy,
            "n_requests": self.n_requests,
            "seed": self.seed,
            "attack": None if self.attack is None else self.attack.to_dict(),
            "latency_units": dict(sorted(self.latency_units.items())),
            "warmup_requests": self.warmup_requests,
            "profile": self.profile,
        }

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# workload


@dataclass(frozen=True)
class RequestEvent:
    tick: int
    user: str
    m_id: str
    attacker: bool = False


ATTACKER_USER = "attacker-0"


def build_workload(
    catalog: Catalog,
    n_requests: int,
    seed: int,
    attack: AttackSpec | None = None,
    users: list[str] | None = None,
) -> list[RequestEvent]:
    """Independent-reference Zipf request stream, optionally interleaved with attack traffic.

    Legitimate item and user draws come from their own seeded streams, so a
    rate-0 attack reproduces the attack-free stream exactly.
    """
    if n_requests < 1:
        raise ConfigError("n_requests must be positive")
    users = users or ["user-0"]
    items_ss, users_ss, coin_ss, attack_ss = np.random.SeedSequence(seed).spawn(4)
    legit_items = np.random.default_rng(items_ss).choice(catalog.n_items, size=n_requests, p=catalog.weights())
    legit_users = np.random.default_rng(users_ss).integers(0, len(users), size=n_requests)
    if attack is None or attack.rate == 0.0:
        is_attack = np.zeros(n_requests, dtype=bool)
    else:
        is_attack = np.random.default_rng(coin_ss).random(n_requests) < attack.rate
    attack_rng = np.random.default_rng(attack_ss)
    targets = attack.target_items if attack else ()

    events = []
    n_legit = n_attack = 0
    for tick in range(n_requests):
        if is_attack[tick]:
            if attack.mode == "false-locality":
                index = targets[int(attack_rng.integers(len(targets)))]
            else:
                index = targets[n_attack % len(targets)]
            n_attack += 1
            events.append(RequestEvent(tick, ATTACKER_USER, catalog.item_id(index), True))
        else:
            events.append(
                RequestEvent(tick, users[legit_users[n_legit]], catalog.item_id(int(legit_items[n_legit])))
            )
            n_legit += 1
    return events


# ---------------------------------------------------------------------------
# caches


class Cache:
    """Byte-bounded whole-item cache with LRU or LFU replacement.

    LFU ties are broken by the oldest last access.
    """

    def __init__(self, capacity_bytes: int, policy: str = "lru"):
        if policy not in POLICIES:
            raise ConfigError(f"policy must be one of {POLICIES}")
        self.capacity_bytes = capacity_bytes
        self.policy = policy
        self.used_bytes = 0
        # key -> [value, size, frequency, last_access]
        self._entries: OrderedDict = OrderedDict()

    def __contains__(self, key) -> bool:
        return key in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def keys(self):
        return list(self._entries)

    def peek(self, key):
        entry = self._entries.get(key)
        return None if entry is None else entry[0]

    def get(self, key, tick: int):
        entry = self._entries.get(key)
        if entry is None:
            return None
        entry[2] += 1
        entry[3] = tick
        self._entries.move_to_end(key)
        return entry[0]

    def discard(self, key) -> None:
        entry = self._entries.pop(key, None)
        if entry is not None:
            self.used_bytes -= entry[1]

    def put(self, key, value, size: int, tick: int) -> list:
        """Insert and return evicted keys. Oversized items are not stored."""
        if size > self.capacity_bytes:
            return []
        self.discard(key)
        evicted = []
        while self.used_bytes + size > self.capacity_bytes:
            victim = self._victim()
            self.discard(victim)
            evicted.append(victim)
        self._entries[key] = [value, size, 1, tick]
        self.used_bytes += size
        return evicted

    def _victim(self):
        if self.policy == "lru":
            return next(iter(self._entries))
        return min(self._entries.items(), key=lambda kv: (kv[1][2], kv[1][3]))[0]


# ---------------------------------------------------------------------------
# metrics


@dataclass
class ClassCounts:
    requests: int = 0
    hits: int = 0
    neighbor_hits: int = 0
    misses: int = 0

    @property
    def hit_rate(self) -> float:
        return (self.hits + self.neighbor_hits) / self.requests if self.requests else 0.0


@dataclass
class Metrics:
    """Run counters. ``hit_rate`` counts both local and neighbour hits as served at the edge."""

    config_hash: str = ""
    requests: int = 0
    hits: int = 0
    neighbor_hits: int = 0
    misses: int = 0
    origin_bytes: int = 0
    latency_total: float = 0.0
    legit: ClassCounts = field(default_factory=ClassCounts)
    attacker: ClassCounts = field(default_factory=ClassCounts)
    post_warmup: ClassCounts = field(default_factory=ClassCounts)
    crypto_calls: dict[str, int] = field(default_factory=lambda: dict.fromkeys(CRYPTO_ALGORITHMS, 0))
    ops: OpCounter = field(default_factory=OpCounter)
    moves: int = 0
    rollovers: int = 0

    @property
    def hit_rate(self) -> float:
        return (self.hits + self.neighbor_hits) / self.requests if self.requests else 0.0

    @property
    def local_hit_rate(self) -> float:
        return self.hits / self.requests if self.requests else 0.0

    @property
    def mean_latency(self) -> float:
        return self.latency_total / self.requests if self.requests else 0.0

    def record(self, outcome: Outcome, attacker: bool, post_warmup: bool, latency: float) -> None:
        self.requests += 1
        self.latency_total += latency
        buckets = [self.attacker if attacker else self.legit]
        if post_warmup:
            buckets.append(self.post_warmup)
        for b in buckets:
            b.requests += 1
        if outcome is Outcome.HIT:
            self.hits += 1
            for b in buckets:
                b.hits += 1
        elif outcome is Outcome.NEIGHBOR_HIT:
            self.neighbor_hits += 1
            for b in buckets:
                b.neighbor_hits += 1
        else:
            self.misses += 1
            for b in buckets:
                b.misses += 1

    def check(self) -> None:
        assert self.hits + self.neighbor_hits + self.misses == self.requests
        assert self.legit.requests + self.attacker.requests == self.requests
        for name in ("hits", "neighbor_hits", "misses"):
            assert getattr(self.legit, name) + getattr(self.attacker, name) == getattr(self, name)
        assert min(self.hits, self.neighbor_hits, self.misses, self.origin_bytes) >= 0

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "requests": self.requests,
            "hits": self.hits,
            "neighbor_hits": self.neighbor_hits,
            "misses": self.misses,
            "hit_rate": self.hit_rate,
            "local_hit_rate": self.local_hit_rate,
            "legit": asdict(self.legit) | {"hit_rate": self.legit.hit_rate},
            "attacker": asdict(self.attacker) | {"hit_rate": self.attacker.hit_rate},
            "post_warmup": asdict(self.post_warmup) | {"hit_rate": self.post_warmup.hit_rate},
            "legit_hit_rate": self.legit.hit_rate,
            "attacker_hit_rate": self.attacker.hit_rate,
            "origin_bytes": self.origin_bytes,
            "latency_total": self.latency_total,
            "mean_latency": self.mean_latency,
            "crypto_calls": dict(self.crypto_calls),
            "scalar_muls": self.ops.scalar_mul_count,
            "ops": self.ops.snapshot(),
            "moves": self.moves,
            "rollovers": self.rollovers,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def csv_row(self) -> list:
        d = self.to_dict()
        return [d[c] for c in METRICS_CSV_COLUMNS]


def metrics_csv(rows: list[Metrics]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(METRICS_CSV_COLUMNS)
    for m in rows:
        writer.writerow(m.csv_row())
    return buf.getvalue()


# ---------------------------------------------------------------------------
# simulator


class ContentMismatch(AssertionError):
    """A user recovered something other than the catalogue plaintext."""


class EdgeCacheSim:
    """Mutable state of one run: TA, origin, edge caches and users."""

    def __init__(self, config: SimConfig):
        self.config = config
        self.catalog = config.catalog
        self.topology = config.topology
        self.group = get_profile(config.profile)
        self.rng = random.Random(f"crypto:{config.seed}")
        self.metrics = Metrics(config_hash=config.config_hash())

        self.params, self._master = pr.setup(self.group, self.rng)
        self.service_keys: dict[str, tuple[pr.ServiceSecret, pr.ServicePublicKey]] = {}
        for s in range(self.catalog.n_services):
            sid = self.catalog.service_of(s)
            self.service_keys[sid] = pr.serv_key_ext(self.params, self._master, sid, self.rng)
        self.epoch = 1
        self._recipients: dict[tuple, pr.RecipientKey] = {}
        self.edge_keys: dict[str, tuple[pr.EdgeSecret, pr.EdgePublicKey]] = {}
        self._issue_edge_keys()

        self.caches = {n: Cache(config.capacity_bytes, config.policy) for n in self.topology.nodes}
        self._contents: dict[int, bytes] = {}

        self.location: dict[str, str] = {}
        self.user_edge_secret: dict[str, pr.EdgeSecret] = {}
        for user in self.topology.users:
            self._place(user, self.topology.initial_node(user))
        attack_node = config.attack.node if config.attack and config.attack.node else self.topology.nodes[0]
        self._place(ATTACKER_USER, attack_node)
        self._move_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 1]))

    # -- TA ---------------------------------------------------------------

    def _issue_edge_keys(self) -> None:
        for node in self.topology.nodes:
            self.edge_keys[node] = pr.edge_key_ext(self.params, self._master, node, self.epoch, self.rng)
        self._recipients.clear()

    def _place(self, user: str, node: str) -> None:
        secret, epk = self.edge_keys[node]
        if not pr.verify_edge_key(self.params, epk, secret):
            raise RuntimeError(f"TA issued an invalid edge key for {node}")
        self.location[user] = node
        self.user_edge_secret[user] = secret

    def ue_move(self, user: str, new_node: str, tick: int | None = None) -> None:
        """User enters ``new_node``'s area; TA hands over that area's current secret."""
        if new_node not in self.topology.nodes:
            raise ConfigError(f"unknown node {new_node!r}")
        self._place(user, new_node)
        self.metrics.moves += 1

    def rollover(self, epoch: int) -> None:
        """Start time slot ``epoch``: fresh edge keys everywhere, users re-provisioned in place."""
        self.epoch = epoch
        self._issue_edge_keys()
        for user, node in self.location.items():
            self._place(user, node)
        self.metrics.rollovers += 1

    def credential(self, user: str, service_id: str) -> pr.UserCredential:
        # every simulated user is registered for every service
        return pr.UserCredential(self.service_keys[service_id][0], self.user_edge_secret[user])

    # -- content ------------------------------------------------------------

    def content(self, index: int) -> bytes:
        data = self._contents.get(index)
        if data is None:
            data = self._contents[index] = self.catalog.content(index, self.config.seed)
        return data

    def _count(self, name: str) -> OpCounter:
        self.metrics.crypto_calls[name] += 1
        return self.metrics.ops

    def _origin_encrypt(self, index: int, node: str) -> pr.FirstLevelCiphertext:
        sid = self.catalog.service_of(index)
        key = (sid, node, self.epoch)
        recipient = self._recipients.get(key)
        counter = self._count("encrypt")
        if recipient is None:
            spk = self.service_keys[sid][1]
            epk = self.edge_keys[node][1]
            recipient = self._recipients[key] = pr.recipient_key(self.params, spk, epk, counter)
        ct = pr.encrypt_to(self.params, recipient, self.content(index), self.catalog.item_id(index), self.rng, counter)
        self.metrics.origin_bytes += len(wire.dumps(ct, self.group))
        return ct

    def _deliver(self, user: str, ct: pr.FirstLevelCiphertext) -> bytes:
        cred = self.credential(user, ct.service_id.decode())
        here = self.location[user]
        if ct.edge_id.decode() == here:
            return pr.decrypt(self.params, cred, ct, self._count("decrypt"))
        holder_secret = self.edge_keys[ct.edge_id.decode()][0]
        rk = pr.rekey_gen(self.params, holder_secret, self.edge_keys[here][1], self.rng, self._count("rekey_gen"))
        rct = pr.re_encrypt(self.params, rk, ct, self._count("re_encrypt"))
        return pr.re_decrypt(self.params, cred, rct, self._count("re_decrypt"))

    def _lookup(self, node: str, key, tick: int):
        cache = self.caches[node]
        ct = cache.peek(key)
        if ct is None:
            return None
        if ct.epoch != self.epoch:
            cache.discard(key)
            return None
        return cache.get(key, tick)

    # -- event loop -----------------------------------------------------------

    def handle_request(self, event: RequestEvent) -> Outcome:
        index = self.catalog.index_of(event.m_id)
        node = self.location[event.user]
        key = (self.catalog.service_of(index), event.m_id)
        size = self.catalog.item_size_bytes

        ct = self._lookup(node, key, event.tick)
        if ct is not None:
            outcome = Outcome.HIT
        else:
            for other in self.topology.neighbors_of(node):
                ct = self._lookup(other, key, event.tick)
                if ct is not None:
                    outcome = Outcome.NEIGHBOR_HIT
                    break
            else:
                outcome = Outcome.MISS
                ct = self._origin_encrypt(index, node)
            self.caches[node].put(key, ct, size, event.tick)

        if self._deliver(event.user, ct) != self.content(index):
            raise ContentMismatch(f"tick {event.tick}: wrong plaintext for {event.m_id}")

        latency = self.config.latency_units[_LATENCY_KEY[outcome]]
        self.metrics.record(outcome, event.attacker, event.tick >= self.config.warmup_requests, latency)
        return outcome

    def _maybe_move(self, event: RequestEvent) -> None:
        rate = self.topology.mobility_rate
        if rate <= 0 or event.attacker:
            return
        if self._move_rng.random() < rate:
            adj = self.topology.neighbors_of(self.location[event.user])
            if adj:
                self.ue_move(event.user, adj[int(self._move_rng.integers(len(adj)))], event.tick)

    def step(self, event: RequestEvent) -> Outcome:
        length = self.topology.epoch_length
        if length:
            epoch = 1 + event.tick // length
            if epoch != self.epoch:
                self.rollover(epoch)
        self._maybe_move(event)
        return self.handle_request(event)

    def run(self, events) -> Metrics:
        for event in events:
            self.step(event)
        self.metrics.check()
        return self.metrics


def run(config: SimConfig | dict) -> Metrics:
    """Run one simulation; identical configs give byte-identical ``Metrics.to_json()``."""
    if isinstance(config, dict):
        config = SimConfig.from_dict(config)
    events = build_workload(config.catalog, config.n_requests, config.seed, config.attack, config.topology.users)
    return EdgeCacheSim(config).run(events)


def load_config(path) -> SimConfig:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return SimConfig.from_dict(data)
