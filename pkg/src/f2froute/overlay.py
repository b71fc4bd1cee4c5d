"""Kademlia-style virtual overlay routed over the tree embeddings.

Nodes hold 160-bit identifiers and k-bucket routing tables; an overlay
hop between two nodes is realized by greedy routing on the embeddings,
so lookups report both overlay and underlay hop counts. Lookups are
recursive with overlay-level backtracking: a node whose contact attempt
fails retries an alternative entry, and dead entries are evicted on the
failed contact (reactive repair).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from f2froute.embedding import Embedding
from f2froute.graph import Graph
from f2froute.routing import RoutingConfig, route_multi

ID_BITS = 160


@dataclass
class DhtConfig:
    bucket_size: int = 8
    alpha: int = 1
    replication: int = 1

    def __post_init__(self):
        if self.bucket_size < 1:
            raise ValueError(f"bucket_size must be >= 1, got {self.bucket_size}")
        if self.alpha < 1:
            raise ValueError(f"alpha must be >= 1, got {self.alpha}")
        if self.replication < 1:
            raise ValueError(f"replication must be >= 1, got {self.replication}")


@dataclass
class BucketEntry:
    kad_id: int
    node: int
    addresses: tuple | None = None  # gamma return addresses, when distributed


@dataclass
class DhtNode:
    kad_id: int
    # bucket j holds only entries whose id shares exactly j leading bits
    buckets: dict[int, list[BucketEntry]] = field(default_factory=dict)

    def entries(self):
        for bucket in self.buckets.values():
            yield from bucket

    def remove_entry(self, node: int) -> None:
        for j, bucket in list(self.buckets.items()):
            self.buckets[j] = [e for e in bucket if e.node != node]
            if not self.buckets[j]:
                del self.buckets[j]


@dataclass
class LookupOutcome:
    success: bool
    terminal: int | None
    overlay_hops: int
    underlay_hops: int
    overlay_path: list[int]


def xor_distance(a: int, b: int) -> int:
    return a ^ b


def id_cpl(a: int, b: int) -> int:
    """Number of shared leading bits of two identifiers."""
    if a == b:
        return ID_BITS
    return ID_BITS - (a ^ b).bit_length()


def assign_ids(n: int, seed: int) -> list[int]:
    rng = random.Random(seed)
    ids: list[int] = []
    used: set[int] = set()
    for _ in range(n):
        x = rng.getrandbits(ID_BITS)
        while x in used:
            x = rng.getrandbits(ID_BITS)
        used.add(x)
        ids.append(x)
    return ids


def build_overlay(
    g: Graph, cfg: DhtConfig, seed: int, addresses: list[tuple] | None = None
) -> list[DhtNode]:
    """Assign random ids and fill every k-bucket.

    Filling walks the implicit binary trie over the ids: at depth d the
    sibling branch of a node contains exactly the peers with common
    prefix length d, so each bucket draws up to k random entries from
    its sibling branch. This stands in for the discovery lookups a
    deployment would run, with the same resulting table distribution.
    """
    rng = random.Random(seed)
    n = g.node_count
    ids = assign_ids(n, seed)
    nodes = [DhtNode(ids[v]) for v in range(n)]

    def entry(w: int) -> BucketEntry:
        return BucketEntry(ids[w], w, addresses[w] if addresses is not None else None)

    def fill(members: list[int], depth: int) -> None:
        if len(members) <= 1 or depth >= ID_BITS:
            return
        shift = ID_BITS - 1 - depth
        zeros = [v for v in members if not (ids[v] >> shift) & 1]
        ones = [v for v in members if (ids[v] >> shift) & 1]
        for group, sibling in ((zeros, ones), (ones, zeros)):
            if not sibling:
                continue
            for v in group:
                if len(sibling) <= cfg.bucket_size:
                    pick = sibling
                else:
                    pick = rng.sample(sibling, cfg.bucket_size)
                nodes[v].buckets[depth] = [entry(w) for w in pick]
        fill(zeros, depth + 1)
        fill(ones, depth + 1)

    fill(list(range(n)), 0)
    return nodes


def dht_lookup(
    key: int,
    origin: int,
    nodes: list[DhtNode],
    g: Graph,
    emb: Embedding,
    cfg: DhtConfig,
    rcfg: RoutingConfig,
    live=None,
    drop_nodes=frozenset(),
    rng: random.Random | None = None,
) -> LookupOutcome:
    """Recursive lookup for the live node closest to key in XOR distance.

    Runs alpha walks from the origin's closest entries. Each walk moves
    to the closest strictly closer table entry it can reach over the
    embeddings; unreachable entries are evicted and the next alternative
    tried, and a walk terminates at a node with no reachable closer
    entry. The best terminal over all walks is reported.
    """
    if rng is None:
        rng = random.Random(0)
    underlay = 0
    overlay_hops = 0
    path = [origin]

    def closer_entries(u: int) -> list[BucketEntry]:
        d_u = xor_distance(nodes[u].kad_id, key)
        es = [e for e in nodes[u].entries() if xor_distance(e.kad_id, key) < d_u]
        es.sort(key=lambda e: xor_distance(e.kad_id, key))
        return es

    def contact(u: int, e: BucketEntry) -> bool:
        nonlocal underlay
        if live is not None and not live[e.node]:
            nodes[u].remove_entry(e.node)
            return False
        out = route_multi(
            g, emb, u, e.node, rcfg, live=live, drop_nodes=drop_nodes, rng=rng
        )
        underlay += out.total_hops
        if not out.success or e.node in drop_nodes:
            nodes[u].remove_entry(e.node)
            return False
        return True

    def walk(start: int) -> int:
        nonlocal overlay_hops
        u = start
        while True:
            advanced = False
            for e in closer_entries(u):
                if contact(u, e):
                    overlay_hops += 1
                    path.append(e.node)
                    u = e.node
                    advanced = True
                    break
            if not advanced:
                return u

    first = closer_entries(origin)
    if not first:
        return LookupOutcome(True, origin, 0, 0, path)
    terminals = []
    starts = 0
    for e in list(first):
        if starts >= cfg.alpha:
            break
        if contact(origin, e):
            starts += 1
            overlay_hops += 1
            path.append(e.node)
            terminals.append(walk(e.node))
    if not terminals:
        return LookupOutcome(False, None, overlay_hops, underlay, path)
    best = min(terminals, key=lambda t: xor_distance(nodes[t].kad_id, key))
    if xor_distance(nodes[origin].kad_id, key) < xor_distance(nodes[best].kad_id, key):
        best = origin
    return LookupOutcome(True, best, overlay_hops, underlay, path)


def store_targets(key: int, nodes: list[DhtNode], cfg: DhtConfig, live=None) -> list[int]:
    """The replication closest live ids, where a value for key resides."""
    cands = [
        v for v in range(len(nodes)) if live is None or live[v]
    ]
    cands.sort(key=lambda v: xor_distance(nodes[v].kad_id, key))
    return cands[: cfg.replication]


def overlay_stabilize(
    nodes: list[DhtNode],
    live,
    addresses: list[tuple] | None = None,
) -> int:
    """One maintenance round: contact every table entry, evict the dead,
    refresh stored return addresses of the live. Returns evictions."""
    evicted = 0
    for node in nodes:
        for j, bucket in list(node.buckets.items()):
            kept = []
            for e in bucket:
                if live is not None and not live[e.node]:
                    evicted += 1
                    continue
                if addresses is not None:
                    e.addresses = addresses[e.node]
                kept.append(e)
            if kept:
                node.buckets[j] = kept
            else:
                del node.buckets[j]
    return evicted
