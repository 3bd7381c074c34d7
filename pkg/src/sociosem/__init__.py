"""Retweet-network community detection and semantic-network analysis."""
__version__ = "0.1.0"

from .bigraph import BipartiteGraph, Graph, GraphError
from .kernels import BACKEND

__all__ = ["BACKEND", "BipartiteGraph", "Graph", "GraphError", "__version__"]
