"""Communication graph algebra for the follower network."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class Topology:
    """Undirected follower graph plus leader access flags.

    ``adjacency[i, j] = 1`` when followers i and j exchange estimates and
    ``leader_links[i] = 1`` when follower i observes the leader directly.
    """

    adjacency: np.ndarray
    leader_links: np.ndarray
    n: int = field(init=False)

    def __post_init__(self):
        adj = np.array(self.adjacency, dtype=float)
        links = np.array(self.leader_links, dtype=float).reshape(-1)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {adj.shape}")
        if links.shape[0] != adj.shape[0]:
            raise ValueError(
                f"leader_links has {links.shape[0]} entries for {adj.shape[0]} followers")
        adj.setflags(write=False)
        links.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "leader_links", links)
        object.__setattr__(self, "n", adj.shape[0])

    @classmethod
    def from_edges(cls, n, edges, leader_links):
        """Build from 1-based undirected edge pairs."""
        adj = np.zeros((n, n))
        for i, j in edges:
            adj[i - 1, j - 1] = adj[j - 1, i - 1] = 1.0
        return cls(adj, leader_links)

    def neighbors(self, i):
        return [int(j) for j in np.flatnonzero(self.adjacency[i])]

    def __eq__(self, other):
        if not isinstance(other, Topology):
            return NotImplemented
        return (np.array_equal(self.adjacency, other.adjacency)
                and np.array_equal(self.leader_links, other.leader_links))

    def __hash__(self):
        return hash((self.adjacency.tobytes(), self.leader_links.tobytes()))


@dataclass
class ValidationReport:
    connected: bool
    has_leader_access: bool
    problems: list[str]

    @property
    def ok(self):
        return not self.problems


def laplacian(topology: Topology) -> np.ndarray:
    adj = topology.adjacency
    lap = -adj.copy()
    lap[np.diag_indices_from(lap)] = adj.sum(axis=1) - np.diag(adj)
    return lap


def h_matrix(topology: Topology) -> np.ndarray:
    """Laplacian plus the diagonal of leader access flags."""
    return laplacian(topology) + np.diag(topology.leader_links)


def _is_connected(adj):
    n = adj.shape[0]
    if n == 0:
        return False
    seen = {0}
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for j in np.flatnonzero(adj[i]):
            if j not in seen:
                seen.add(int(j))
                queue.append(int(j))
    return len(seen) == n


def validate(topology: Topology) -> ValidationReport:
    """Check the graph requirements of the estimators without raising.

    Every violated condition is listed in ``problems``; weights outside
    {0, 1}, asymmetry and self loops are reported alongside connectivity
    and leader access.
    """
    adj = topology.adjacency
    links = topology.leader_links
    problems = []
    if not np.all(np.isin(adj, (0.0, 1.0))):
        problems.append("adjacency weights must be 0 or 1")
    if not np.all(np.isin(links, (0.0, 1.0))):
        problems.append("leader_links entries must be 0 or 1")
    if not np.array_equal(adj, adj.T):
        problems.append("adjacency must be symmetric (undirected graph)")
    if np.any(np.diag(adj) != 0):
        problems.append("adjacency diagonal must be zero (no self loops)")
    connected = _is_connected(adj != 0)
    if not connected:
        problems.append("follower graph is not connected (connectivity assumption)")
    has_leader = float(np.sum(links)) >= 1
    if not has_leader:
        problems.append("no follower has access to the leader (connectivity assumption)")
    return ValidationReport(connected, has_leader, problems)


def min_symmetric_eigenvalue(m) -> float:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    if not np.allclose(m, m.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(m).max(initial=0.0))):
        raise ValueError("matrix must be symmetric")
    return float(np.linalg.eigvalsh(m)[0])


def random_topology(n, rng, edge_prob=0.4, leader_prob=0.3) -> Topology:
    """Random connected topology with at least one leader link.

    A random spanning tree guarantees connectivity; extra edges are added
    independently with ``edge_prob``.
    """
    adj = np.zeros((n, n))
    order = rng.permutation(n)
    for k in range(1, n):
        i, j = order[k], order[rng.integers(k)]
        adj[i, j] = adj[j, i] = 1.0
    extra = np.triu(rng.random((n, n)) < edge_prob, 1)
    adj = np.maximum(adj, (extra | extra.T).astype(float))
    links = (rng.random(n) < leader_prob).astype(float)
    if not links.any():
        links[rng.integers(n)] = 1.0
    return Topology(adj, links)
