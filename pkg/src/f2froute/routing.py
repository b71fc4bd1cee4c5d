"""Greedy routing with backtracking over the tree embeddings.

A message carries the set of neighbors each node already forwarded it
to and the chain of nodes it travelled through. Every node forwards to
a random member of the closest-neighbor set when that is a strict
improvement over its own distance, backtracks to the node it came from
otherwise, and the route fails when the source runs out of options.
Since improving edges strictly decrease the distance the chain is a
simple path, and the search discovers a route exactly when a path of
responsive nodes with strictly decreasing distance exists.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace

from f2froute.addresses import (
    AddressKeys,
    PppAddress,
    ReturnAddress,
    _matched_prefix,
    ppp_partial_decrypt,
    rp_order_key,
)
from f2froute.embedding import (
    Coordinate,
    Embedding,
    EmbeddingConfig,
    cpl_order_key,
    delta_td,
)
from f2froute.graph import Graph

METRICS = ("TD", "CPL")
ADDRESSING = ("coordinate", "rp-address", "ppp-address")
EMBEDDING_CHOICE = ("random-tau", "min-neighbor-distance")

NO_PROGRESS = "no-progress"
DROPPED = "dropped-by-adversary"
HOP_CAP = "hop-cap"

ORACLE_NODE_LIMIT = 1000


@dataclass
class RoutingConfig:
    tau: int = 1
    metric: str = "TD"
    addressing: str = "coordinate"
    backtracking: bool = True
    embedding_choice: str = "random-tau"
    max_hops: int | None = None  # None: 4 * (n + m), scales with explorable edges

    def __post_init__(self):
        if self.tau < 1:
            raise ValueError(f"tau must be >= 1, got {self.tau}")
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if self.addressing not in ADDRESSING:
            raise ValueError(f"addressing must be one of {ADDRESSING}, got {self.addressing!r}")
        if self.embedding_choice not in EMBEDDING_CHOICE:
            raise ValueError(
                f"embedding_choice must be one of {EMBEDDING_CHOICE}, got {self.embedding_choice!r}"
            )
        if self.max_hops is not None and self.max_hops < 1:
            raise ValueError(f"max_hops must be >= 1, got {self.max_hops}")


@dataclass
class RouteOutcome:
    success: bool
    hops: int                       # messages consumed, backtracking included
    path: list[int]                 # every node visited, in order
    failure_reason: str | None = None
    route_length: int | None = None  # discovered route (predecessor chain) on success


@dataclass
class MultiRouteOutcome:
    """Result of tau parallel attempts over distinct embeddings."""

    success: bool
    total_hops: int
    best_route_length: int | None
    trees: list[int]
    attempts: list[RouteOutcome] = field(default_factory=list)


def _key_fn(emb, tree, dest, cfg, metric, address, keys):
    """Per-evaluator comparison key; smaller means closer to the target.

    Keys differ by addressing mode but order candidates identically, so
    routes are unchanged when coordinates are swapped for addresses.
    """
    if address is None:
        dest_coord = emb.coord(tree, dest)
        if dest_coord is None:
            raise ValueError(f"destination {dest} has no coordinate in tree {tree}")
        if metric == "TD":
            return lambda u, c: delta_td(c, dest_coord)
        return lambda u, c: cpl_order_key(c, dest_coord)
    ecfg = emb.cfg
    if isinstance(address, ReturnAddress):
        return lambda u, c: rp_order_key(address, c, metric, ecfg)
    if metric != "CPL":
        raise ValueError("encrypted addresses route under the CPL metric only")
    decrypted: dict[int, tuple[int, ...]] = {}

    def ppp_key(u, c):
        vec = decrypted.get(u)
        if vec is None:
            vec = decrypted[u] = ppp_partial_decrypt(address, keys[u], ecfg)
        m = _matched_prefix(vec, c, address.routing_seed, ecfg.bits_per_element)
        return (1, -m, len(c))

    return ppp_key


def route(
    g: Graph,
    emb: Embedding,
    src: int,
    dest: int,
    tree: int,
    cfg: RoutingConfig,
    live=None,
    drop_nodes=frozenset(),
    address: ReturnAddress | PppAddress | None = None,
    keys: list[AddressKeys] | None = None,
    rng: random.Random | None = None,
) -> RouteOutcome:
    """Route one message from src toward dest's coordinate in one tree.

    live is an optional per-node boolean sequence; failed nodes are never
    picked as next hop. Nodes in drop_nodes accept the message and drop
    it; with backtracking the sender notices the silence and retries its
    next option, without backtracking the message is simply lost. When
    an address is given the comparison runs on the address while success
    is still recognition by the issuer.
    """
    if rng is None:
        rng = random.Random(0)
    if src == dest:
        return RouteOutcome(True, 0, [src], route_length=0)
    key = _key_fn(emb, tree, dest, cfg, cfg.metric, address, keys)
    cap = cfg.max_hops if cfg.max_hops is not None else 4 * (g.node_count + g.edge_count)
    forwarded: dict[int, set[int]] = {src: set()}
    chain = [src]
    hops = 0
    path = [src]
    while True:
        u = chain[-1]
        own = key(u, emb.coord(tree, u))
        cands = [
            v
            for v in g.neighbors(u)
            if (live is None or live[v])
            and v not in forwarded[u]
            and emb.coord(tree, v) is not None
        ]
        best = None
        best_key = None
        if cands:
            keyed = [(key(u, emb.coord(tree, v)), v) for v in cands]
            best_key = min(k for k, _ in keyed)
            best = [v for k, v in keyed if k == best_key]
        if best is not None and best_key < own:
            nxt = best[0] if len(best) == 1 else rng.choice(best)
            forwarded[u].add(nxt)
            hops += 1
            path.append(nxt)
            if hops > cap:
                return RouteOutcome(False, hops, path, HOP_CAP)
            if nxt == dest:
                return RouteOutcome(True, hops, path, route_length=len(chain))
            if nxt in drop_nodes:
                if not cfg.backtracking:
                    return RouteOutcome(False, hops, path, DROPPED)
                path.append(u)  # the sender resumes after the silent drop
                continue
            forwarded.setdefault(nxt, set())
            chain.append(nxt)
            continue
        if not cfg.backtracking:
            return RouteOutcome(False, hops, path, NO_PROGRESS)
        chain.pop()
        if not chain:
            return RouteOutcome(False, hops, path, NO_PROGRESS)
        hops += 1
        path.append(chain[-1])
        if hops > cap:
            return RouteOutcome(False, hops, path, HOP_CAP)


def greedy_route(g, emb, src, dest, tree, cfg, **kw) -> RouteOutcome:
    """route without the backtracking fallback; stops at local optima."""
    return route(g, emb, src, dest, tree, replace(cfg, backtracking=False), **kw)


def select_trees(
    g: Graph,
    emb: Embedding,
    src: int,
    dest: int,
    cfg: RoutingConfig,
    live,
    rng: random.Random,
    addresses=None,
    keys=None,
) -> list[int]:
    """Pick the tau embeddings a source sends over."""
    gamma = emb.gamma
    if cfg.tau > gamma:
        raise ValueError(f"tau={cfg.tau} exceeds the {gamma} available embeddings")
    if cfg.tau == gamma:
        return list(range(gamma))
    if cfg.embedding_choice == "random-tau":
        return sorted(rng.sample(range(gamma), cfg.tau))
    scored = []
    for i in range(gamma):
        addr = addresses[i] if addresses is not None else None
        key = _key_fn(emb, i, dest, cfg, cfg.metric, addr, keys)
        cands = [
            key(src, emb.coord(i, v))
            for v in g.neighbors(src)
            if (live is None or live[v]) and emb.coord(i, v) is not None
        ]
        if cands:
            scored.append((min(cands), i))
    scored.sort()
    picked = [i for _, i in scored[: cfg.tau]]
    if len(picked) < cfg.tau:  # fewer scorable trees than tau: fill uniformly
        rest = [i for i in range(gamma) if i not in picked]
        picked += rng.sample(rest, cfg.tau - len(picked))
    return sorted(picked)


def route_multi(
    g: Graph,
    emb: Embedding,
    src: int,
    dest: int,
    cfg: RoutingConfig,
    live=None,
    drop_nodes=frozenset(),
    addresses: list | None = None,
    keys: list[AddressKeys] | None = None,
    rng: random.Random | None = None,
) -> MultiRouteOutcome:
    """Run route over tau independently selected embeddings.

    addresses, when given, holds one address per tree (index-aligned).
    Success if any attempt succeeds; hops are summed over all attempts
    since every message costs its sender regardless of outcome.
    """
    if rng is None:
        rng = random.Random(0)
    trees = select_trees(g, emb, src, dest, cfg, live, rng, addresses, keys)
    attempts = []
    total = 0
    best = None
    for i in trees:
        addr = addresses[i] if addresses is not None else None
        out = route(
            g, emb, src, dest, i, cfg,
            live=live, drop_nodes=drop_nodes, address=addr, keys=keys, rng=rng,
        )
        attempts.append(out)
        total += out.hops
        if out.success and (best is None or out.route_length < best):
            best = out.route_length
    return MultiRouteOutcome(
        success=best is not None,
        total_hops=total,
        best_route_length=best,
        trees=trees,
        attempts=attempts,
    )


def greedy_path_exists(
    g: Graph,
    coords: list[Coordinate | None],
    src: int,
    dest: int,
    metric: str,
    cfg: EmbeddingConfig,
    live=None,
) -> bool:
    """Brute-force oracle: is there a live path with strictly decreasing
    distance to dest at every step? Test-only; refuses large instances."""
    if g.node_count > ORACLE_NODE_LIMIT:
        raise ValueError(
            f"oracle refuses n={g.node_count} > {ORACLE_NODE_LIMIT}; it is for small test instances"
        )
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")
    dest_coord = coords[dest]
    if dest_coord is None or coords[src] is None:
        return False
    if live is not None and not (live[src] and live[dest]):
        return False
    if src == dest:
        return True

    def key(v):
        if metric == "TD":
            return delta_td(coords[v], dest_coord)
        return cpl_order_key(coords[v], dest_coord)

    # edges only go from larger to strictly smaller key: plain DFS suffices
    seen = {src}
    stack = [src]
    while stack:
        u = stack.pop()
        ku = key(u)
        for v in g.neighbors(u):
            if v in seen or coords[v] is None:
                continue
            if live is not None and not live[v]:
                continue
            if key(v) < ku:
                if v == dest:
                    return True
                seen.add(v)
                stack.append(v)
    return False
