"""Randomized prefix coordinates over spanning trees and their distances.

Each node's coordinate is its parent's coordinate extended by a fresh
random b-bit element, so nodes in the same subtree share a prefix. Two
distances are provided: the tree hop distance and a common-prefix-length
dominant distance that avoids routes through the root.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from f2froute.trees import TreeSet

Coordinate = tuple[int, ...]


@dataclass
class EmbeddingConfig:
    bits_per_element: int = 128
    max_length: int = 128   # padding target for return addresses
    cpl_constant: int = 128  # the constant L in the prefix distance

    def __post_init__(self):
        if self.bits_per_element < 1:
            raise ValueError("bits_per_element must be >= 1")
        if self.max_length < 1:
            raise ValueError("max_length must be >= 1")


class Embedding:
    """Per-tree coordinate maps; immutable between stabilization events."""

    def __init__(self, coords: list[list[Coordinate | None]], cfg: EmbeddingConfig):
        self.coords = coords
        self.cfg = cfg

    @property
    def gamma(self) -> int:
        return len(self.coords)

    def coord(self, tree: int, node: int) -> Coordinate | None:
        return self.coords[tree][node]

    def dump(self) -> str:
        """Diagnostic rows 'tree node coordinate'."""
        lines = []
        for i, tree in enumerate(self.coords):
            for v, c in enumerate(tree):
                if c is not None:
                    lines.append(f"{i} {v} {','.join(map(str, c))}")
        return "\n".join(lines) + "\n"


def assign_coordinates(
    ts: TreeSet,
    cfg: EmbeddingConfig,
    seed: int,
    fabricate_children_of: int | None = None,
) -> Embedding:
    """Assign coordinates top-down in every tree; deterministic per seed.

    The root gets the empty vector; each child extends its parent's
    coordinate by one random element, redrawn on collision with a sibling.
    If fabricate_children_of is set, that node hands each of its children
    an independent random prefix instead of its true coordinate (the
    embedding sabotage used by the random-prefix attack).
    """
    rng = random.Random(seed)
    bits = cfg.bits_per_element
    coords: list[list[Coordinate | None]] = []
    for i in range(ts.gamma):
        tree_coords: list[Coordinate | None] = [None] * ts.node_count
        root = ts.roots[i]
        tree_coords[root] = ()
        queue = deque([root])
        while queue:
            u = queue.popleft()
            kids = ts.children[i][u]
            if not kids:
                continue
            fabricate = u == fabricate_children_of
            if len(kids) > 2**bits:
                raise ValueError(
                    f"{len(kids)} siblings cannot get distinct {bits}-bit elements"
                )
            used: set[int] = set()
            for v in kids:
                if fabricate:
                    prefix = tuple(rng.getrandbits(bits) for _ in range(ts.level[i][u]))
                else:
                    prefix = tree_coords[u]
                elem = rng.getrandbits(bits)
                while elem in used:
                    elem = rng.getrandbits(bits)
                used.add(elem)
                tree_coords[v] = prefix + (elem,)
                queue.append(v)
        coords.append(tree_coords)
    return Embedding(coords, cfg)


def cpl(x1: Coordinate, x2: Coordinate) -> int:
    """Length of the longest common prefix of two element sequences."""
    n = 0
    for a, b in zip(x1, x2):
        if a != b:
            break
        n += 1
    return n


def delta_td(x1: Coordinate, x2: Coordinate) -> int:
    """Tree hop distance between two coordinates."""
    return len(x1) + len(x2) - 2 * cpl(x1, x2)


def delta_cpl(x1: Coordinate, x2: Coordinate, cfg: EmbeddingConfig) -> Fraction:
    """Prefix-dominant distance: longer common prefixes always win, shorter
    total length breaks ties. Exact rational, no floating-point ties."""
    if x1 == x2:
        return Fraction(0)
    return cfg.cpl_constant - cpl(x1, x2) - Fraction(1, len(x1) + len(x2) + 1)


def cpl_order_key(x1: Coordinate, x2: Coordinate) -> tuple[int, int, int]:
    """Comparison key with the same ordering as delta_cpl (routing fast path)."""
    if x1 == x2:
        return (0, 0, 0)
    return (1, -cpl(x1, x2), len(x1) + len(x2))
