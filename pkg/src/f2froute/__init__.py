"""Friend-to-friend overlay routing simulator.

Simulates greedy routing over multiple randomized tree embeddings of a
social graph, anonymous hash-cascade return addresses, a Kademlia-style
virtual overlay for content addressing, and failure/censorship attack
scenarios.
"""

from f2froute.graph import Graph, GraphStats
from f2froute.trees import TreeConfig, TreeSet
from f2froute.embedding import Embedding, EmbeddingConfig
from f2froute.routing import RouteOutcome, RoutingConfig

__all__ = [
    "Graph",
    "GraphStats",
    "TreeConfig",
    "TreeSet",
    "Embedding",
    "EmbeddingConfig",
    "RouteOutcome",
    "RoutingConfig",
]

__version__ = "0.1.0"
