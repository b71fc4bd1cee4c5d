"""Anonymous route-preserving return addresses.

A node publishes a hash cascade of its padded coordinate instead of the
coordinate itself. Any forwarder can compare a neighbor coordinate
against the cascade (the diversity measure) and take exactly the same
greedy decision it would take on the plain coordinate, without learning
the receiver's position. An optional symmetric-encryption layer bound to
subtree keys further restricts evaluators to "closer than me" checks.
"""

from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from f2froute.embedding import Coordinate, Embedding, EmbeddingConfig, cpl
from f2froute.trees import TreeSet

NON_NEIGHBOR = "non-neighbor"
POSSIBLE_DESCENDANT = "possible-descendant"


class UnsupportedMetricError(ValueError):
    """The requested metric is not defined for this address type."""


def _shake(tag: bytes, *values: int, bits: int) -> int:
    data = tag + b"".join((v % (1 << 256)).to_bytes(32, "little") for v in values)
    nbytes = (bits + 7) // 8
    out = int.from_bytes(hashlib.shake_256(data).digest(nbytes), "little")
    return out & ((1 << bits) - 1)


def hash_value(value: int, bits: int) -> int:
    """The pinned b-bit hash H used throughout the cascade."""
    return _shake(b"hc", value, bits=bits)


def prng_value(key: int, counter: int, bits: int) -> int:
    """Keyed pseudo-random generator evaluated at a counter position."""
    return _shake(b"prng", key, counter, bits=bits)


def _sym_pad(key: int, bits: int) -> int:
    return _shake(b"sym", key, bits=bits)


def sym_encrypt(key: int, digest: int, bits: int) -> int:
    """Keyed permutation on the hash domain standing in for a real cipher."""
    return digest ^ _sym_pad(key, bits)


def sym_decrypt(key: int, digest: int, bits: int) -> int:
    return digest ^ _sym_pad(key, bits)


def hash_cascade(elements, seed_value: int, bits: int) -> tuple[int, ...]:
    """Chained digests: d_1 = H(k xor e_1), d_j = H(d_(j-1) xor e_j).

    Entry j depends only on the seed value and the first j elements, so
    vectors agreeing on a prefix produce cascades agreeing on that prefix.
    """
    out = []
    prev = seed_value
    for e in elements:
        prev = hash_value(prev ^ e, bits)
        out.append(prev)
    return tuple(out)


@dataclass(frozen=True)
class ReturnAddress:
    digest_vector: tuple[int, ...]
    routing_seed: int
    mac_tag: int
    tree_index: int = 0

    def to_bytes(self, cfg: EmbeddingConfig) -> bytes:
        """Fixed-width record: L digests, seed, mac; little-endian elements."""
        bits = cfg.bits_per_element
        if bits % 8:
            raise ValueError("binary layout requires bits_per_element % 8 == 0")
        w = bits // 8
        parts = [d.to_bytes(w, "little") for d in self.digest_vector]
        parts.append(self.routing_seed.to_bytes(w, "little"))
        parts.append(self.mac_tag.to_bytes(w, "little"))
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, blob: bytes, cfg: EmbeddingConfig, tree_index: int = 0) -> "ReturnAddress":
        bits = cfg.bits_per_element
        if bits % 8:
            raise ValueError("binary layout requires bits_per_element % 8 == 0")
        w = bits // 8
        if len(blob) != (cfg.max_length + 2) * w:
            raise ValueError(f"expected {(cfg.max_length + 2) * w} bytes, got {len(blob)}")
        vals = [int.from_bytes(blob[i : i + w], "little") for i in range(0, len(blob), w)]
        return cls(tuple(vals[:-2]), vals[-2], vals[-1], tree_index)


@dataclass(frozen=True)
class PppAddress:
    encrypted_vector: tuple[int, ...]
    routing_seed: int
    mac_tag: int
    tree_index: int = 0


@dataclass
class AddressKeys:
    """A node's MAC secret plus its per-tree chain of subtree keys.

    subtree_keys holds the keys of the node's ancestors at levels
    1..l-1; generated holds the key the node itself created for its
    children (internal nodes at level >= 1 only). When evaluating an
    encrypted address the node can use both.
    """

    mac_key: int
    subtree_keys: dict[int, tuple[int, ...]]
    generated: dict[int, int] = None

    def __post_init__(self):
        if self.generated is None:
            self.generated = {}

    def decrypt_chain(self, tree: int) -> tuple[int, ...]:
        chain = self.subtree_keys.get(tree, ())
        own = self.generated.get(tree)
        return chain if own is None else chain + (own,)


def _mac(key: int, vector: tuple[int, ...], bits: int) -> int:
    return _shake(b"mac", key, *vector, bits=bits)


def generate_address_keys(n: int, seed: int, bits: int) -> list[AddressKeys]:
    """Fresh per-node MAC keys; subtree keys are filled in per tree."""
    return [
        AddressKeys(mac_key=prng_value(seed, v, bits), subtree_keys={})
        for v in range(n)
    ]


def distribute_subtree_keys(
    ts: TreeSet, tree: int, seed: int, keys: list[AddressKeys], bits: int = 128
) -> None:
    """Give every node the keys of its ancestors at levels 1..level-1.

    The key generated by an internal node is shared by its entire subtree,
    so two nodes with common prefix length cp share exactly the keys of
    their first cp ancestors below the root's children boundary.
    """
    if not 0 <= tree < ts.gamma:
        raise ValueError(f"tree index {tree} out of range [0, {ts.gamma})")
    root = ts.roots[tree]
    keys[root].subtree_keys[tree] = ()
    queue = deque([(root, ())])
    while queue:
        u, chain = queue.popleft()
        if ts.level[tree][u] >= 1 and ts.children[tree][u]:
            own_key = prng_value(seed, (tree << 32) ^ u, bits)
            keys[u].generated[tree] = own_key
            child_chain = chain + (own_key,)
        else:
            child_chain = chain
        for v in ts.children[tree][u]:
            # a node at level l holds the keys of its ancestors at 1..l-1
            keys[v].subtree_keys[tree] = child_chain[: max(ts.level[tree][v] - 1, 0)]
            queue.append((v, child_chain))


def generate_rp(
    x: Coordinate,
    keys: AddressKeys,
    children_next_elements: set[int],
    s: int,
    s_pad: int,
    cfg: EmbeddingConfig,
    tree_index: int = 0,
) -> ReturnAddress:
    """Pad the coordinate, apply the hash cascade, and add a MAC.

    The first padding element is redrawn (new padding seed) while it
    collides with a child's next coordinate element, so the issuer stays
    the unique closest coordinate to its own padded coordinate.
    """
    bits = cfg.bits_per_element
    big_l = cfg.max_length
    l = len(x)
    if l > big_l:
        raise ValueError(f"coordinate length {l} exceeds padding target {big_l}")
    while True:
        padding = tuple(prng_value(s_pad, j, bits) for j in range(l + 1, big_l + 1))
        if l == big_l or padding[0] not in children_next_elements:
            break
        s_pad += 1
    padded = tuple(x) + padding
    k = prng_value(s, 0, bits)
    digests = hash_cascade(padded, k, bits)
    return ReturnAddress(
        digest_vector=digests,
        routing_seed=k,
        mac_tag=_mac(keys.mac_key, digests, bits),
        tree_index=tree_index,
    )


def verify_mac(addr: ReturnAddress | PppAddress, keys: AddressKeys, bits: int = 128) -> bool:
    vector = addr.digest_vector if isinstance(addr, ReturnAddress) else addr.encrypted_vector
    return _mac(keys.mac_key, vector, bits) == addr.mac_tag


def _matched_prefix(vector: tuple[int, ...], c: Coordinate, seed_value: int, bits: int) -> int:
    """Cascade c lazily and count agreement with the published vector."""
    prev = seed_value
    m = 0
    for e in c:
        if m >= len(vector):
            break
        prev = hash_value(prev ^ e, bits)
        if prev != vector[m]:
            break
        m += 1
    return m


def diversity_rp(
    addr: ReturnAddress, c: Coordinate, metric: str, cfg: EmbeddingConfig
) -> int | Fraction:
    """Distance-like comparison of a candidate coordinate to a return address.

    Orders candidates exactly as the underlying distance to the issuer's
    coordinate does (route preservation).
    """
    bits = cfg.bits_per_element
    m = _matched_prefix(addr.digest_vector, c, addr.routing_seed, bits)
    big_l = len(addr.digest_vector)
    if metric == "TD":
        return big_l + len(c) - 2 * m
    if metric == "CPL":
        return cfg.cpl_constant - m - Fraction(1, big_l + len(c) + 1)
    raise UnsupportedMetricError(f"unknown metric {metric!r}")


def rp_order_key(addr: ReturnAddress, c: Coordinate, metric: str, cfg: EmbeddingConfig):
    """Cheap comparison key with the same ordering as diversity_rp."""
    bits = cfg.bits_per_element
    m = _matched_prefix(addr.digest_vector, c, addr.routing_seed, bits)
    if metric == "TD":
        return len(addr.digest_vector) + len(c) - 2 * m
    return (1, -m, len(c))


def add_ppp_layer(addr: ReturnAddress, issuer_keys: AddressKeys, cfg: EmbeddingConfig) -> PppAddress:
    """Encrypt elements 2..l of the digest vector under the issuer's subtree keys."""
    tree = addr.tree_index
    if tree not in issuer_keys.subtree_keys:
        raise KeyError(f"issuer holds no subtree keys for tree {tree}")
    chain = issuer_keys.subtree_keys[tree]
    bits = cfg.bits_per_element
    vec = list(addr.digest_vector)
    for j in range(2, len(chain) + 2):  # issuer level l = len(chain) + 1
        vec[j - 1] = sym_encrypt(chain[j - 2], vec[j - 1], bits)
    encrypted = tuple(vec)
    return PppAddress(
        encrypted_vector=encrypted,
        routing_seed=addr.routing_seed,
        mac_tag=_mac(issuer_keys.mac_key, encrypted, bits),
        tree_index=tree,
    )


def ppp_partial_decrypt(
    addr: PppAddress, evaluator_keys: AddressKeys, cfg: EmbeddingConfig
) -> tuple[int, ...]:
    """Decrypt the prefix the evaluator holds keys for; pass the rest through.

    An evaluator at level l_u decrypts with its ancestors' keys plus the
    key it generated for its own children, covering elements 2..l_u (or
    2..l_u+1 for internal nodes). Elements decrypted with the wrong key
    (beyond the common prefix with the issuer) come out as noise, which
    only lowers the apparent common prefix length, never raises it.
    """
    bits = cfg.bits_per_element
    chain = evaluator_keys.decrypt_chain(addr.tree_index)
    vec = list(addr.encrypted_vector)
    for j in range(2, min(len(chain) + 1, len(vec)) + 1):
        vec[j - 1] = sym_decrypt(chain[j - 2], vec[j - 1], bits)
    return tuple(vec)


def diversity_ppp(
    addr: PppAddress,
    c: Coordinate,
    evaluator_keys: AddressKeys,
    cfg: EmbeddingConfig,
    metric: str = "CPL",
) -> Fraction:
    """Prefix-distance of a candidate against a PPP address; CPL only."""
    if metric != "CPL":
        raise UnsupportedMetricError("the encrypted layer supports only the CPL metric")
    bits = cfg.bits_per_element
    decrypted = ppp_partial_decrypt(addr, evaluator_keys, cfg)
    m = _matched_prefix(decrypted, c, addr.routing_seed, bits)
    return cfg.cpl_constant - m - Fraction(1, len(decrypted) + len(c) + 1)


def candidate_receiver_set(
    addrs: list[ReturnAddress],
    neighbor_coords: dict[int, list[Coordinate]],
    cfg: EmbeddingConfig,
):
    """Best local inference of the receiver behind an address vector.

    neighbor_coords maps each neighbor to its per-tree coordinates. If the
    closest neighbors disagree across trees, or some closest neighbor does
    not match the address on its full coordinate, the receiver is provably
    not a neighbor. Otherwise every surviving neighbor remains consistent
    with the view, and so does any of its (unseen) descendants.
    """
    bits = cfg.bits_per_element
    matched: dict[int, list[int]] = {v: [] for v in neighbor_coords}
    argmins: list[set[int]] = []
    for i, addr in enumerate(addrs):
        best_key = None
        best: set[int] = set()
        for v, coords in neighbor_coords.items():
            c = coords[i]
            m = _matched_prefix(addr.digest_vector, c, addr.routing_seed, bits)
            matched[v].append(m)
            key = (-m, len(c))
            if best_key is None or key < best_key:
                best_key = key
                best = {v}
            elif key == best_key:
                best.add(v)
        argmins.append(best)
    common = set.intersection(*argmins) if argmins else set()
    survivors = {
        v
        for v in common
        if all(matched[v][i] == len(neighbor_coords[v][i]) for i in range(len(addrs)))
    }
    if not survivors:
        return {NON_NEIGHBOR}
    return survivors | {POSSIBLE_DESCENDANT}


def address_for_node(
    emb: Embedding,
    ts: TreeSet,
    node: int,
    tree: int,
    keys: AddressKeys,
    s: int,
    s_pad: int,
) -> ReturnAddress:
    """Generate a return address for a node's coordinate in one tree."""
    x = emb.coord(tree, node)
    if x is None:
        raise ValueError(f"node {node} has no coordinate in tree {tree}")
    l = len(x)
    children_next = {
        emb.coord(tree, c)[l]
        for c in ts.children[tree][node]
        if emb.coord(tree, c) is not None
    }
    return generate_rp(x, keys, children_next, s, s_pad, emb.cfg, tree_index=tree)
