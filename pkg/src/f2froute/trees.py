"""Construction and stabilization of gamma parallel spanning trees.

Trees are built by a synchronous round-based invitation protocol: once a
node is part of tree i it invites all neighbors in the next round, and
un-joined nodes accept invitations preferring neighbors that parent them
in the fewest trees (parent diversity). Acceptance of a non-preferred
invitation happens with probability q per round, guaranteeing
termination. A plain per-tree BFS is available as a baseline strategy.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass

from f2froute.graph import Graph, connected_components, diameter_estimate

ABSENT = -2
ROOT = -1

STRATEGIES = ("DIV-RAND", "DIV-DEP", "BFS")


class ConstructionError(RuntimeError):
    """Tree construction cannot proceed (disconnected input, round cap)."""


class JoinError(RuntimeError):
    """A joining node has no usable neighbor in some tree."""


class RootDepartureError(RuntimeError):
    """Departure of a tree root; caller must reconstruct that tree."""

    def __init__(self, node: int, trees: list[int]):
        super().__init__(f"node {node} is the root of trees {trees}")
        self.node = node
        self.trees = trees


@dataclass
class TreeConfig:
    gamma: int = 1
    accept_prob: float = 0.5
    strategy: str = "DIV-RAND"
    rng_seed: int = 0

    def __post_init__(self):
        if self.gamma < 1:
            raise ValueError(f"gamma must be >= 1, got {self.gamma}")
        if not 0 < self.accept_prob <= 1:
            raise ValueError(f"accept_prob must be in (0, 1], got {self.accept_prob}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")


class TreeSet:
    """Per-tree parent/child/level records plus parent-diversity counters.

    parent[i][v] is ABSENT while v is outside tree i, ROOT for the root.
    pc[v] maps a neighbor to the number of trees in which that neighbor
    is currently v's parent.
    """

    def __init__(self, n: int, roots: list[int]):
        gamma = len(roots)
        self.roots = list(roots)
        self.parent = [[ABSENT] * n for _ in range(gamma)]
        self.level = [[-1] * n for _ in range(gamma)]
        self.join_round = [[-1] * n for _ in range(gamma)]
        self.children = [[[] for _ in range(n)] for _ in range(gamma)]
        self.pc = [dict() for _ in range(n)]
        self.clock = 0
        for i, r in enumerate(roots):
            self.parent[i][r] = ROOT
            self.level[i][r] = 0
            self.join_round[i][r] = 0

    @property
    def gamma(self) -> int:
        return len(self.roots)

    @property
    def node_count(self) -> int:
        return len(self.pc)

    def in_tree(self, tree: int, v: int) -> bool:
        return self.parent[tree][v] != ABSENT

    def attach(self, tree: int, v: int, parent: int, round_no: int) -> None:
        self.parent[tree][v] = parent
        self.level[tree][v] = self.level[tree][parent] + 1
        self.join_round[tree][v] = round_no
        self.children[tree][parent].append(v)
        self.pc[v][parent] = self.pc[v].get(parent, 0) + 1

    def min_parent_count(self, g: Graph, v: int) -> int:
        """Minimal pc over all neighbors of v (0 unless every neighbor parents v)."""
        pcv = self.pc[v]
        if len(pcv) < g.degree(v):
            return 0
        return min(pcv.values())

    def descendants(self, tree: int, node: int) -> list[int]:
        out = []
        stack = list(self.children[tree][node])
        while stack:
            u = stack.pop()
            out.append(u)
            stack.extend(self.children[tree][u])
        return out

    def copy(self) -> "TreeSet":
        dup = TreeSet.__new__(TreeSet)
        dup.roots = list(self.roots)
        dup.parent = [list(p) for p in self.parent]
        dup.level = [list(l) for l in self.level]
        dup.join_round = [list(j) for j in self.join_round]
        dup.children = [[list(c) for c in tree] for tree in self.children]
        dup.pc = [dict(d) for d in self.pc]
        dup.clock = self.clock
        return dup

    def dump(self) -> str:
        """Diagnostic text dump: one 'tree node parent level' line per member."""
        lines = ["tree node parent level"]
        for i in range(self.gamma):
            for v in range(self.node_count):
                if self.in_tree(i, v):
                    lines.append(f"{i} {v} {self.parent[i][v]} {self.level[i][v]}")
        return "\n".join(lines) + "\n"

    def validate(self, g: Graph) -> None:
        """Assert structural invariants; raises AssertionError on violation."""
        for i in range(self.gamma):
            for v in range(self.node_count):
                p = self.parent[i][v]
                if p == ABSENT:
                    continue
                if p == ROOT:
                    assert v == self.roots[i] and self.level[i][v] == 0
                    continue
                assert v in g.neighbors(p) or p in g.neighbors(v)
                assert self.level[i][v] == self.level[i][p] + 1
                assert v in self.children[i][p]
                # parent chain reaches the root in level(v) steps
                u, steps = v, 0
                while self.parent[i][u] != ROOT:
                    u = self.parent[i][u]
                    steps += 1
                    assert steps <= self.node_count
                assert steps == self.level[i][v]


def elect_root(g: Graph, policy: str, seed: int, node: int | None = None) -> int:
    """Stand-in for a distributed root election; deterministic per seed."""
    if g.node_count == 0:
        raise ValueError("empty graph")
    if policy == "fixed":
        if node is None or not 0 <= node < g.node_count:
            raise ValueError(f"fixed root {node} out of range [0, {g.node_count})")
        return node
    if policy == "max-degree":
        return max(range(g.node_count), key=lambda v: (g.degree(v), -v))
    if policy == "random":
        return random.Random(seed).randrange(g.node_count)
    raise ValueError(f"unknown root policy {policy!r}")


class TreeBuilder:
    """In-progress synchronous construction; step() runs one round."""

    def __init__(self, g: Graph, cfg: TreeConfig, roots: list[int]):
        if len(roots) != cfg.gamma:
            raise ConstructionError(f"need {cfg.gamma} roots, got {len(roots)}")
        comps = connected_components(g)
        if len(comps) != 1:
            raise ConstructionError(
                f"input graph has {len(comps)} components; pass the giant component"
            )
        self.g = g
        self.cfg = cfg
        self.rng = random.Random(cfg.rng_seed)
        self.ts = TreeSet(g.node_count, roots)
        self.round = 0
        diam = diameter_estimate(g, seed=cfg.rng_seed)
        self.round_cap = max(10, int(50 * cfg.gamma / cfg.accept_prob * max(diam, 1)))
        self.joined = cfg.gamma  # (node, tree) memberships so far
        self.target = g.node_count * cfg.gamma
        # pending invitations: node -> tree -> list of (inviter, inviter_level)
        self.pending: dict[int, dict[int, list[tuple[int, int]]]] = {}
        self._outbox: list[tuple[int, int, int]] = [
            (i, r, 0) for i, r in enumerate(roots)
        ]

    @property
    def finished(self) -> bool:
        return self.joined >= self.target

    def invitations(self, node: int) -> dict[int, list[tuple[int, int]]]:
        """Pending invitations of a node, keyed by tree index (test hook)."""
        return {t: list(v) for t, v in self.pending.get(node, {}).items()}

    def step(self) -> None:
        """One synchronous round: deliver invitations, then let nodes decide."""
        if self.finished:
            return
        self.round += 1
        ts, g = self.ts, self.g
        for tree, u, lvl in self._outbox:
            for v in g.neighbors(u):
                if not ts.in_tree(tree, v):
                    self.pending.setdefault(v, {}).setdefault(tree, []).append((u, lvl))
        self._outbox = []
        for v in list(self.pending):
            choice = self._decide(v)
            if choice is None:
                continue
            tree, w, wlvl = choice
            ts.attach(tree, v, w, self.round)
            self.joined += 1
            del self.pending[v][tree]
            if not self.pending[v]:
                del self.pending[v]
            self._outbox.append((tree, v, wlvl + 1))

    def _decide(self, v: int) -> tuple[int, int, int] | None:
        """Apply the invitation-selection rule; returns (tree, inviter, level)."""
        ts = self.ts
        pcv = ts.pc[v]
        invs = self.pending[v]
        min_all = ts.min_parent_count(self.g, v)
        preferred = [
            (tree, w, lvl)
            for tree, lst in invs.items()
            for (w, lvl) in lst
            if pcv.get(w, 0) == min_all
        ]
        if preferred:
            return self._select(preferred)
        if self.rng.random() > self.cfg.accept_prob:
            return None
        best = min(pcv.get(w, 0) for lst in invs.values() for (w, _) in lst)
        available = [
            (tree, w, lvl)
            for tree, lst in invs.items()
            for (w, lvl) in lst
            if pcv.get(w, 0) == best
        ]
        return self._select(available)

    def _select(self, candidates: list[tuple[int, int, int]]) -> tuple[int, int, int]:
        if self.cfg.strategy == "DIV-DEP":
            low = min(lvl for _, _, lvl in candidates)
            candidates = [c for c in candidates if c[2] == low]
        return self.rng.choice(candidates)

    def run(self) -> TreeSet:
        while not self.finished:
            if self.round >= self.round_cap:
                raise ConstructionError(
                    f"round cap {self.round_cap} hit with {self.target - self.joined} "
                    "memberships outstanding"
                )
            self.step()
        return self.ts


def _construct_bfs(g: Graph, cfg: TreeConfig, roots: list[int]) -> TreeSet:
    """Independent per-tree breadth-first construction with random child order."""
    comps = connected_components(g)
    if len(comps) != 1:
        raise ConstructionError(f"input graph has {len(comps)} components; pass the giant component")
    rng = random.Random(cfg.rng_seed)
    ts = TreeSet(g.node_count, roots)
    for i, r in enumerate(roots):
        queue = deque([r])
        while queue:
            u = queue.popleft()
            nbrs = list(g.neighbors(u))
            rng.shuffle(nbrs)
            for v in nbrs:
                if not ts.in_tree(i, v):
                    ts.attach(i, v, u, ts.level[i][u] + 1)
                    queue.append(v)
    return ts


def construct_trees(g: Graph, cfg: TreeConfig, roots: list[int]) -> TreeSet:
    """Build gamma spanning trees of a connected graph."""
    if cfg.strategy == "BFS":
        return _construct_bfs(g, cfg, roots)
    return TreeBuilder(g, cfg, roots).run()


def handle_join(
    ts: TreeSet, g: Graph, new_node: int, seed: int = 0, accept_prob: float = 0.5
) -> TreeSet:
    """Join a node as a leaf of every tree by replaying the invitation protocol.

    Neighbors are assumed to invite one round after their recorded
    join_round; the node applies the same selection rule locally.
    """
    rng = random.Random(seed)
    gamma = ts.gamma
    for i in range(gamma):
        if ts.in_tree(i, new_node):
            raise JoinError(f"node {new_node} already in tree {i}")
        if not any(ts.in_tree(i, w) for w in g.neighbors(new_node)):
            raise JoinError(f"node {new_node} has no neighbor in tree {i}")
    events: list[tuple[int, int, int, int]] = []  # (arrival_round, tree, inviter, level)
    for i in range(gamma):
        for w in g.neighbors(new_node):
            if ts.in_tree(i, w):
                events.append((ts.join_round[i][w] + 1, i, w, ts.level[i][w]))
    events.sort()
    pending: dict[int, list[tuple[int, int]]] = {}
    joined: dict[int, tuple[int, int]] = {}
    pc: dict[int, int] = {}
    degree = g.degree(new_node)
    round_no, idx = 0, 0
    cap = (events[-1][0] if events else 0) + 1000
    while len(joined) < gamma:
        round_no += 1
        if round_no > cap:
            raise JoinError(f"join replay for node {new_node} did not converge")
        while idx < len(events) and events[idx][0] <= round_no:
            _, tree, w, lvl = events[idx]
            idx += 1
            if tree not in joined:
                pending.setdefault(tree, []).append((w, lvl))
        if not pending:
            continue
        min_all = 0 if len(pc) < degree else min(pc.values())
        cands = [
            (tree, w, lvl)
            for tree, lst in pending.items()
            for (w, lvl) in lst
            if pc.get(w, 0) == min_all
        ]
        if not cands:
            if rng.random() > accept_prob:
                continue
            best = min(pc.get(w, 0) for lst in pending.values() for (w, _) in lst)
            cands = [
                (tree, w, lvl)
                for tree, lst in pending.items()
                for (w, lvl) in lst
                if pc.get(w, 0) == best
            ]
        tree, w, _ = rng.choice(cands)
        joined[tree] = (w, round_no)
        pc[w] = pc.get(w, 0) + 1
        del pending[tree]
    ts.clock += 1
    for tree, (w, _) in joined.items():
        ts.attach(tree, new_node, w, ts.clock + max(ts.join_round[tree]))
    return ts


def handle_departure(
    ts: TreeSet, g: Graph, node: int, seed: int = 0
) -> tuple[TreeSet, int]:
    """Remove a non-root node from all trees; reattach its subtrees.

    Children of the departed node pick a new parent among neighbors still
    in the tree, preferring minimal parent count; whole subtrees move with
    them. Returns the number of coordinate reassignments, i.e. the total
    descendant count of the departed node across trees.
    """
    root_trees = [i for i in range(ts.gamma) if ts.roots[i] == node]
    if root_trees:
        raise RootDepartureError(node, root_trees)
    rng = random.Random(seed)
    ts.clock += 1
    reassigned = 0
    for i in range(ts.gamma):
        if not ts.in_tree(i, node):
            continue
        detached = set()
        subtree_roots = list(ts.children[i][node])
        for c in subtree_roots:
            detached.add(c)
            detached.update(ts.descendants(i, c))
            ts.parent[i][c] = ABSENT
            cnt = ts.pc[c].get(node, 0) - 1
            if cnt > 0:
                ts.pc[c][node] = cnt
            else:
                ts.pc[c].pop(node, None)
        reassigned += len(detached)
        old_parent = ts.parent[i][node]
        if old_parent >= 0:
            ts.children[i][old_parent].remove(node)
            cnt = ts.pc[node].get(old_parent, 0) - 1
            if cnt > 0:
                ts.pc[node][old_parent] = cnt
            else:
                ts.pc[node].pop(old_parent, None)
        ts.parent[i][node] = ABSENT
        ts.level[i][node] = -1
        ts.children[i][node] = []
        rng.shuffle(subtree_roots)
        _reattach(ts, g, i, subtree_roots, detached, rng)
    return ts, reassigned


def _reattach(ts, g, tree, subtree_roots, detached, rng):
    """Attach detached subtrees back into the tree, re-rooting if needed."""
    while subtree_roots:
        progress = False
        for c in list(subtree_roots):
            cands = [
                v
                for v in g.neighbors(c)
                if ts.in_tree(tree, v) and v not in detached
            ]
            if not cands:
                continue
            best = min(ts.pc[c].get(v, 0) for v in cands)
            pick = rng.choice([v for v in cands if ts.pc[c].get(v, 0) == best])
            ts.attach(tree, c, pick, ts.clock + max(ts.join_round[tree]))
            for d in _relevel(ts, tree, c):
                detached.discard(d)
            detached.discard(c)
            subtree_roots.remove(c)
            progress = True
        if progress:
            continue
        # no subtree root can attach directly; re-root one at an interior
        # node that has an attached neighbor
        rerooted = False
        for c in list(subtree_roots):
            for d in [c] + ts.descendants(tree, c):
                if any(
                    ts.in_tree(tree, v) and v not in detached
                    for v in g.neighbors(d)
                ):
                    if d != c:
                        _reroot_subtree(ts, tree, c, d)
                        subtree_roots.remove(c)
                        subtree_roots.append(d)
                    rerooted = True
                    break
            if rerooted:
                break
        if not rerooted:
            # disconnected remainder: drop the stranded nodes from the tree
            for c in subtree_roots:
                for d in [c] + ts.descendants(tree, c):
                    p = ts.parent[tree][d]
                    if p >= 0:
                        cnt = ts.pc[d].get(p, 0) - 1
                        if cnt > 0:
                            ts.pc[d][p] = cnt
                        else:
                            ts.pc[d].pop(p, None)
                    ts.parent[tree][d] = ABSENT
                    ts.level[tree][d] = -1
                    ts.children[tree][d] = []
            return


def _relevel(ts, tree, root):
    """Recompute levels below root after reattachment; yields the subtree."""
    out = []
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in ts.children[tree][u]:
            ts.level[tree][v] = ts.level[tree][u] + 1
            out.append(v)
            queue.append(v)
    return out


def _reroot_subtree(ts, tree, old_root, new_root):
    """Reverse parent pointers along the path new_root -> old_root."""
    path = [new_root]
    u = new_root
    while u != old_root:
        u = ts.parent[tree][u]
        path.append(u)
    for child, parent in zip(path[1:], path):
        # child was parent's parent; flip the edge
        ts.children[tree][child].remove(parent)
        ts.children[tree][parent].append(child)
        ts.parent[tree][child] = parent
        cnt = ts.pc[parent].get(child, 0) - 1
        if cnt > 0:
            ts.pc[parent][child] = cnt
        else:
            ts.pc[parent].pop(child, None)
        ts.pc[child][parent] = ts.pc[child].get(parent, 0) + 1
    ts.parent[tree][new_root] = ABSENT


def descendants_count(ts: TreeSet, node: int, tree: int) -> int:
    """Number of nodes whose parent chain includes node in the given tree."""
    if not 0 <= tree < ts.gamma:
        raise ValueError(f"tree index {tree} out of range [0, {ts.gamma})")
    return len(ts.descendants(tree, node))
