"""Scenario orchestration, metric aggregation, and CSV output.

A scenario fixes the graph source, tree and routing parameters, and an
adversary; running it executes several independent seeded runs and
aggregates per-run means with 95% confidence intervals.
"""

from __future__ import annotations

import math
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from scipy import stats

from f2froute.adversary import (
    AdversaryConfig,
    all_live,
    apply_att_rand,
    apply_att_root,
    attach_attacker,
    choose_roots,
    inject_failures,
)
from f2froute.embedding import EmbeddingConfig, assign_coordinates
from f2froute.graph import Graph, load_edge_list, generate_synthetic
from f2froute.overlay import DhtConfig, build_overlay, dht_lookup
from f2froute.routing import RoutingConfig, route_multi
from f2froute.trees import RootDepartureError, TreeConfig, TreeSet, construct_trees, handle_departure

METRIC_NAMES = ("routing_length", "success_ratio", "stabilization_cost", "dht_underlay_hops")

CSV_HEADER = "scenario,metric,mean,ci95,runs"


@dataclass
class Scenario:
    label: str
    graph: str  # "pa:<n>:<m>", "er:<n>:<p>", or an edge-list path
    tree: TreeConfig = field(default_factory=TreeConfig)
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    routing: RoutingConfig = field(default_factory=RoutingConfig)
    dht: DhtConfig = field(default_factory=DhtConfig)
    adversary: AdversaryConfig = field(default_factory=AdversaryConfig)
    metrics: tuple[str, ...] = ("success_ratio", "routing_length")
    pairs_per_run: int = 1000
    runs: int = 20
    master_seed: int = 0
    stabilization_samples: int = 100
    dht_lookups: int = 100

    def __post_init__(self):
        if "," in self.label:
            raise ValueError("scenario label must not contain commas (CSV field)")
        if self.runs < 1:
            raise ValueError(f"runs must be >= 1, got {self.runs}")
        if self.pairs_per_run < 1:
            raise ValueError(f"pairs_per_run must be >= 1, got {self.pairs_per_run}")
        if self.routing.tau > self.tree.gamma:
            raise ValueError(
                f"tau={self.routing.tau} exceeds gamma={self.tree.gamma}"
            )
        for m in self.metrics:
            if m not in METRIC_NAMES:
                raise ValueError(f"unknown metric {m!r}; choose from {METRIC_NAMES}")


@dataclass
class MetricRow:
    scenario: str
    metric: str
    mean: float
    ci95: float
    runs: int

    def csv_row(self) -> str:
        return f"{self.scenario},{self.metric},{self.mean:.9g},{self.ci95:.9g},{self.runs}"


def resolve_graph(spec: str, seed: int) -> Graph:
    if spec.startswith("pa:"):
        _, n, m = spec.split(":")
        return generate_synthetic("preferential-attachment", int(n), float(m), seed)
    if spec.startswith("er:"):
        _, n, p = spec.split(":")
        return generate_synthetic("erdos-renyi", int(n), float(p), seed)
    return load_edge_list(spec)


def _component_ids(g: Graph, live) -> list[int]:
    """Component label per node over the live-induced subgraph; -1 = dead."""
    comp = [-1] * g.node_count
    label = 0
    for v in range(g.node_count):
        if comp[v] != -1 or not live[v]:
            continue
        stack = [v]
        comp[v] = label
        while stack:
            u = stack.pop()
            for w in g.neighbors(u):
                if live[w] and comp[w] == -1:
                    comp[w] = label
                    stack.append(w)
        label += 1
    return comp


def sample_pairs(g: Graph, live, count: int, rng: random.Random, exclude=()):
    """Source-destination pairs, with replacement, both live and in the
    same surviving component."""
    comp = _component_ids(g, live)
    banned = set(exclude)
    members: dict[int, list[int]] = {}
    for v in range(g.node_count):
        if live[v] and v not in banned:
            members.setdefault(comp[v], []).append(v)
    pools = [m for m in members.values() if len(m) >= 2]
    if not pools:
        return []
    weights = [len(m) for m in pools]
    pairs = []
    for _ in range(count):
        pool = rng.choices(pools, weights=weights)[0]
        s = rng.choice(pool)
        d = rng.choice(pool)
        while d == s:
            d = rng.choice(pool)
        pairs.append((s, d))
    return pairs


def stabilization_metric(
    ts: TreeSet, g: Graph, samples: int, seed: int, exclude=()
) -> float:
    """Mean coordinate reassignments per random non-root departure."""
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    rng = random.Random(seed)
    roots = set(ts.roots) | set(exclude)
    eligible = [v for v in range(ts.node_count) if v not in roots]
    if not eligible:
        return 0.0
    total = 0
    for k in range(samples):
        v = rng.choice(eligible)
        try:
            _, reassigned = handle_departure(ts.copy(), g, v, seed=seed + k)
        except RootDepartureError:  # pragma: no cover - roots filtered above
            continue
        total += reassigned
    return total / samples


def _run_once(s: Scenario, run_idx: int) -> dict[str, float]:
    seed = s.master_seed * 1_000_003 + run_idx
    g = resolve_graph(s.graph, seed)
    tree_cfg = TreeConfig(
        gamma=s.tree.gamma,
        accept_prob=s.tree.accept_prob,
        strategy=s.tree.strategy,
        rng_seed=seed,
    )
    adv = s.adversary
    attacker = None
    if adv.mode == "att-rand":
        g, attacker = attach_attacker(g, adv.attacker_edges, seed ^ adv.seed)
        ts, emb, mask = apply_att_rand(g, attacker, tree_cfg, s.embedding, seed + 1)
    elif adv.mode == "att-root":
        g, attacker = attach_attacker(g, adv.attacker_edges, seed ^ adv.seed)
        ts, emb, mask = apply_att_root(g, attacker, tree_cfg, s.embedding, seed + 1)
    else:
        roots = choose_roots(g, tree_cfg.gamma, seed)
        ts = construct_trees(g, tree_cfg, roots)
        emb = assign_coordinates(ts, s.embedding, seed + 1)
        if adv.mode == "random-failures":
            mask = inject_failures(g, adv.failure_fraction, seed ^ adv.seed)
        else:
            mask = all_live(g.node_count)

    out: dict[str, float] = {}
    exclude = () if attacker is None else (attacker,)
    rng = random.Random(seed + 2)
    if "success_ratio" in s.metrics or "routing_length" in s.metrics:
        pairs = sample_pairs(g, mask.live, s.pairs_per_run, rng, exclude=exclude)
        successes = 0
        lengths = []
        for src, dst in pairs:
            res = route_multi(
                g, emb, src, dst, s.routing,
                live=mask.live, drop_nodes=mask.drop_nodes, rng=rng,
            )
            if res.success:
                successes += 1
                lengths.append(res.best_route_length)
        if "success_ratio" in s.metrics:
            out["success_ratio"] = successes / len(pairs) if pairs else 0.0
        if "routing_length" in s.metrics and lengths:
            out["routing_length"] = sum(lengths) / len(lengths)
    if "stabilization_cost" in s.metrics:
        out["stabilization_cost"] = stabilization_metric(
            ts, g, s.stabilization_samples, seed + 3, exclude=exclude
        )
    if "dht_underlay_hops" in s.metrics:
        dht_nodes = build_overlay(g, s.dht, seed + 4)
        drng = random.Random(seed + 5)
        live_pool = [v for v in mask.live_nodes() if v not in set(exclude)]
        hops = []
        for _ in range(s.dht_lookups):
            origin = drng.choice(live_pool)
            key = drng.getrandbits(160)
            res = dht_lookup(
                key, origin, dht_nodes, g, emb, s.dht, s.routing,
                live=mask.live, drop_nodes=mask.drop_nodes, rng=drng,
            )
            if res.success:
                hops.append(res.underlay_hops)
        if hops:
            out["dht_underlay_hops"] = sum(hops) / len(hops)
    return out


def aggregate(label: str, per_run: list[dict[str, float]], metrics) -> list[MetricRow]:
    rows = []
    for m in metrics:
        vals = [r[m] for r in per_run if m in r]
        if not vals:
            continue
        n = len(vals)
        mean = sum(vals) / n
        if n > 1:
            sd = math.sqrt(sum((v - mean) ** 2 for v in vals) / (n - 1))
            ci = float(stats.t.ppf(0.975, n - 1)) * sd / math.sqrt(n)
        else:
            ci = 0.0
        rows.append(MetricRow(label, m, mean, ci, n))
    return rows


def run_scenario(s: Scenario, workers: int = 1, log=None) -> list[MetricRow]:
    """Execute all runs of a scenario and aggregate the metrics.

    workers > 1 distributes runs over processes; results are identical
    to sequential execution because each run is seeded independently.
    """
    if log is None:
        log = sys.stderr
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_run = list(pool.map(_run_once, [s] * s.runs, range(s.runs)))
    else:
        per_run = []
        for i in range(s.runs):
            per_run.append(_run_once(s, i))
            print(f"{s.label}: run {i + 1}/{s.runs} done", file=log)
    return aggregate(s.label, per_run, s.metrics)


def write_csv(rows: list[MetricRow], path) -> None:
    if not rows:
        raise ValueError("no metric rows to write")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in rows:
            fh.write(row.csv_row() + "\n")
