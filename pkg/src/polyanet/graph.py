"""Undirected network representation, structural analysis, and node targeting.

Nodes are integers ``0..N-1`` in the Python API.  The text file formats and
all JSON emitted by the CLI use 1-indexed node ids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp


class GraphFormatError(ValueError):
    """Malformed adjacency-matrix or edge-list input."""


class DisconnectedGraphError(ValueError):
    """Graph violates the connectivity requirement.

    Carries the connected components (lists of 0-indexed nodes) so callers
    can report or recover.
    """

    def __init__(self, components):
        self.components = [sorted(c) for c in components]
        sizes = sorted((len(c) for c in self.components), reverse=True)
        super().__init__(
            f"graph is disconnected: {len(self.components)} components "
            f"with sizes {sizes}"
        )


class Network:
    """Undirected, irreflexive graph with precomputed closed neighbourhoods.

    Parameters
    ----------
    adjacency : (N, N) array-like of 0/1 or bool
        Symmetric adjacency matrix with a zero diagonal.
    require_connected : bool, optional
        Reject disconnected graphs (default).  The contagion model assumes
        connectivity; pass ``False`` only for auxiliary constructions such
        as unions of independent subnetworks.

    Attributes
    ----------
    node_count : int
    adjacency : (N, N) bool ndarray
    neighbors : tuple of int ndarray
        Open neighbourhood of each node, sorted.
    closed_neighbors : tuple of int ndarray
        Closed neighbourhood (node plus its neighbours), sorted.
    degrees : int ndarray
    closed_adjacency : scipy.sparse.csr_matrix
        Adjacency plus identity, as float64; multiplying a per-node vector
        by it yields per-node sums over closed neighbourhoods (the super-urn
        aggregation used throughout).
    """

    def __init__(self, adjacency, require_connected: bool = True):
        A = np.asarray(adjacency)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise GraphFormatError(f"adjacency matrix must be square, got shape {A.shape}")
        A = A.astype(bool)
        n = A.shape[0]
        if n == 0:
            raise GraphFormatError("network must have at least one node")
        if A.diagonal().any():
            bad = int(np.flatnonzero(A.diagonal())[0])
            raise GraphFormatError(f"self-loop on node {bad + 1} (diagonal must be zero)")
        if not (A == A.T).all():
            i, j = np.argwhere(A != A.T)[0]
            raise GraphFormatError(
                f"adjacency matrix is not symmetric: entry ({i + 1},{j + 1}) != ({j + 1},{i + 1})"
            )
        self.adjacency = A
        self.node_count = n
        self.neighbors = tuple(np.flatnonzero(A[i]) for i in range(n))
        closed = A.copy()
        np.fill_diagonal(closed, True)
        self.closed_neighbors = tuple(np.flatnonzero(closed[i]) for i in range(n))
        self.degrees = A.sum(axis=1).astype(np.int64)
        self.closed_adjacency = sp.csr_matrix(closed.astype(np.float64))
        self._components = _components(self.neighbors, n)
        if require_connected and len(self._components) > 1:
            raise DisconnectedGraphError(self._components)

    @classmethod
    def from_edges(cls, node_count: int, edges, require_connected: bool = True) -> "Network":
        """Build a network from 0-indexed ``(i, j)`` pairs."""
        A = np.zeros((node_count, node_count), dtype=bool)
        for i, j in edges:
            if i == j:
                raise GraphFormatError(f"self-loop on node {i + 1}")
            if not (0 <= i < node_count and 0 <= j < node_count):
                raise GraphFormatError(f"edge ({i + 1},{j + 1}) out of range for {node_count} nodes")
            A[i, j] = A[j, i] = True
        return cls(A, require_connected=require_connected)

    @property
    def edge_count(self) -> int:
        return int(self.adjacency.sum()) // 2

    def edges(self):
        """Yield edges as 0-indexed pairs ``(i, j)`` with ``i < j``."""
        ii, jj = np.nonzero(np.triu(self.adjacency))
        return list(zip(ii.tolist(), jj.tolist()))

    def is_connected(self) -> bool:
        return len(self._components) == 1

    def __repr__(self):
        return f"Network(nodes={self.node_count}, edges={self.edge_count})"


def _components(neighbors, n):
    seen = np.zeros(n, dtype=bool)
    comps = []
    for s in range(n):
        if seen[s]:
            continue
        comp = [s]
        seen[s] = True
        frontier = [s]
        while frontier:
            nxt = []
            for u in frontier:
                for v in neighbors[u]:
                    if not seen[v]:
                        seen[v] = True
                        comp.append(int(v))
                        nxt.append(int(v))
            frontier = nxt
        comps.append(sorted(comp))
    return comps


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

def parse_network(text: str, fmt: str | None = None, *,
                  require_connected: bool = True,
                  largest_component: bool = False) -> Network:
    """Parse a network from adjacency-matrix or edge-list text.

    Matrix format: first non-comment line is ``N``, followed by N rows of N
    whitespace-separated 0/1 entries.  Edge-list format: one ``i j`` pair per
    line, 1-indexed.  Lines starting with ``#`` and blank lines are ignored.
    ``fmt`` may be ``"matrix"`` or ``"edges"``; when omitted it is sniffed
    from the token count of the first data line.
    """
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise GraphFormatError("empty network file")
    if fmt is None:
        fmt = "matrix" if len(lines[0].split()) == 1 else "edges"
    if fmt == "matrix":
        net = _parse_matrix(lines)
    elif fmt == "edges":
        net = _parse_edges(lines)
    else:
        raise GraphFormatError(f"unknown network format {fmt!r}")
    if largest_component and not net.is_connected():
        comp = max(net._components, key=len)
        keep = np.array(comp, dtype=int)
        net = Network(net.adjacency[np.ix_(keep, keep)])
    elif require_connected and not net.is_connected():
        raise DisconnectedGraphError(net._components)
    return net


def _parse_matrix(lines):
    try:
        n = int(lines[0])
    except ValueError:
        raise GraphFormatError(f"expected node count on first line, got {lines[0]!r}") from None
    if len(lines) - 1 != n:
        raise GraphFormatError(f"expected {n} matrix rows, got {len(lines) - 1}")
    rows = []
    for k, ln in enumerate(lines[1:]):
        toks = ln.split()
        if len(toks) != n:
            raise GraphFormatError(f"row {k + 1} has {len(toks)} entries, expected {n}")
        try:
            row = [int(t) for t in toks]
        except ValueError:
            raise GraphFormatError(f"row {k + 1} contains a non-integer entry") from None
        if any(v not in (0, 1) for v in row):
            raise GraphFormatError(f"row {k + 1} contains an entry outside {{0,1}}")
        rows.append(row)
    return Network(np.array(rows), require_connected=False)


def _parse_edges(lines):
    edges = []
    maxid = 0
    for k, ln in enumerate(lines):
        toks = ln.split()
        if len(toks) != 2:
            raise GraphFormatError(f"edge line {k + 1} must be 'i j', got {ln!r}")
        try:
            i, j = int(toks[0]), int(toks[1])
        except ValueError:
            raise GraphFormatError(f"edge line {k + 1} contains a non-integer id") from None
        if i < 1 or j < 1:
            raise GraphFormatError(f"edge line {k + 1}: node ids are 1-indexed")
        edges.append((i - 1, j - 1))
        maxid = max(maxid, i, j)
    return Network.from_edges(maxid, edges, require_connected=False)


def load_network(path, fmt: str | None = None, *,
                 require_connected: bool = True,
                 largest_component: bool = False) -> Network:
    """Load a network file; see :func:`parse_network` for formats."""
    path = Path(path)
    if fmt is None:
        suffix = path.suffix.lower()
        if suffix in (".adj", ".mat", ".matrix"):
            fmt = "matrix"
        elif suffix in (".edges", ".edgelist", ".el"):
            fmt = "edges"
    return parse_network(path.read_text(), fmt,
                         require_connected=require_connected,
                         largest_component=largest_component)


def save_network(net: Network, path, fmt: str = "matrix") -> Path:
    """Write a network in matrix or edge-list format (1-indexed)."""
    path = Path(path)
    if fmt == "matrix":
        rows = [" ".join("1" if v else "0" for v in row) for row in net.adjacency]
        path.write_text(f"{net.node_count}\n" + "\n".join(rows) + "\n")
    elif fmt == "edges":
        path.write_text("".join(f"{i + 1} {j + 1}\n" for i, j in net.edges()))
    else:
        raise ValueError(f"unknown network format {fmt!r}")
    return path


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------

def generate_barabasi_albert(node_count: int, m: int, seed) -> Network:
    """Preferential-attachment network: complete seed on ``m`` nodes, then
    each new node attaches to ``m`` distinct existing nodes with probability
    proportional to degree.

    The edge count is deterministic: ``m*(m-1)/2 + m*(node_count-m)``;
    e.g. 99 edges for (100, 1) and 945 for (100, 10).
    """
    if not 1 <= m < node_count:
        raise ValueError(f"need 1 <= m < node_count, got m={m}, node_count={node_count}")
    rng = np.random.default_rng(seed)
    edges = [(i, j) for i in range(m) for j in range(i + 1, m)]
    # Multiset of edge endpoints; uniform picks from it are degree-proportional.
    endpoints = [v for e in edges for v in e]
    for v in range(m, node_count):
        if endpoints:
            targets = []
            while len(targets) < m:
                cand = endpoints[rng.integers(len(endpoints))]
                if cand not in targets:
                    targets.append(cand)
        else:
            targets = list(range(m))  # first arrival when the seed has no edges (m == 1)
        for t in targets:
            edges.append((v, t))
            endpoints.extend((v, t))
    return Network.from_edges(node_count, edges)


# ---------------------------------------------------------------------------
# Structural analysis
# ---------------------------------------------------------------------------

def outer_nodes(net: Network) -> np.ndarray:
    """Nodes whose closed neighbourhood is a strict subset of another node's.

    These are the nodes an optimal curing initialization can ignore; the
    complement is :func:`inner_nodes`.
    """
    closed = [frozenset(c.tolist()) for c in net.closed_neighbors]
    sizes = [len(c) for c in closed]
    out = []
    for i in range(net.node_count):
        for j in range(net.node_count):
            if sizes[i] < sizes[j] and closed[i] <= closed[j]:
                out.append(i)
                break
    return np.array(out, dtype=int)


def inner_nodes(net: Network) -> np.ndarray:
    outer = set(outer_nodes(net).tolist())
    return np.array([i for i in range(net.node_count) if i not in outer], dtype=int)


def all_pairs_distances(net: Network) -> np.ndarray:
    """All-pairs shortest path lengths by breadth-first search.

    Raises :class:`DisconnectedGraphError` if any pair is unreachable.
    """
    n = net.node_count
    nbrs = [nb.tolist() for nb in net.neighbors]
    dist = np.full((n, n), -1, dtype=np.int64)
    for s in range(n):
        d = dist[s]
        d[s] = 0
        frontier = [s]
        level = 0
        while frontier:
            level += 1
            nxt = []
            for u in frontier:
                for v in nbrs[u]:
                    if d[v] < 0:
                        d[v] = level
                        nxt.append(v)
            frontier = nxt
    if (dist < 0).any():
        raise DisconnectedGraphError(net._components)
    return dist


def closeness_centrality(net: Network) -> np.ndarray:
    """Closeness score of each node: reciprocal of its total distance to all
    other nodes.  A single-node network gets score 0 by convention.
    """
    if net.node_count == 1:
        return np.zeros(1)
    sums = all_pairs_distances(net).sum(axis=1)
    return 1.0 / sums


@dataclass(frozen=True)
class TargetSet:
    """A set of nodes selected to receive resources.

    ``nodes`` is sorted; ``insertion_order`` preserves the order in which the
    centrality-driven selection added nodes (``None`` for other sources).
    ``absorbed_remainder`` marks that the layered selection hit a round with
    no nested nodes left and absorbed the whole remaining set.
    """

    nodes: tuple
    source: str
    insertion_order: tuple | None = None
    absorbed_remainder: bool = False

    def __len__(self):
        return len(self.nodes)

    def as_array(self) -> np.ndarray:
        return np.array(self.nodes, dtype=int)


def target_set_all(net: Network) -> TargetSet:
    return TargetSet(tuple(range(net.node_count)), "all")


def target_set_inner(net: Network) -> TargetSet:
    return TargetSet(tuple(inner_nodes(net).tolist()), "inner-nodes")


def target_set_layered(net: Network) -> TargetSet:
    """Layered targeting: repeatedly aim at non-nested nodes adjacent to
    nested ones, peeling off the covered closed neighbourhoods, until either
    every node is covered or no nested nodes remain (in which case the whole
    remaining set is targeted).

    Every node of the network ends up with a targeted node inside its closed
    neighbourhood.
    """
    closed = [frozenset(c.tolist()) for c in net.closed_neighbors]
    sizes = [len(c) for c in closed]
    test = set(range(net.node_count))
    targets: list[int] = []
    absorbed = False
    while test:
        outer = {
            i for i in test
            if any(j in test and sizes[i] < sizes[j] and closed[i] <= closed[j]
                   for j in range(net.node_count))
        }
        if not outer:
            targets.extend(sorted(test))
            absorbed = True
            break
        inner = test - outer
        added = sorted(i for i in inner if any(i in closed[j] for j in outer))
        targets.extend(added)
        covered = {i for i in test if any(i in closed[j] for j in added)}
        test -= covered
    return TargetSet(tuple(sorted(targets)), "layered", absorbed_remainder=absorbed)


def target_set_dense(net: Network, prune: bool = False) -> TargetSet:
    """Centrality-greedy targeting: add nodes in descending closeness order
    (ties broken by lower index) until the closed neighbourhoods of the
    chosen nodes cover the network.  With ``prune``, scan the chosen nodes in
    reverse insertion order and drop any whose removal preserves coverage.
    """
    n = net.node_count
    scores = closeness_centrality(net)
    order = sorted(range(n), key=lambda i: (-scores[i], i))
    covered = np.zeros(n, dtype=bool)
    chosen: list[int] = []
    for i in order:
        if covered.all():
            break
        chosen.append(i)
        covered[net.closed_neighbors[i]] = True
    if prune:
        for i in reversed(list(chosen)):
            trial = np.zeros(n, dtype=bool)
            for j in chosen:
                if j != i:
                    trial[net.closed_neighbors[j]] = True
            if trial.all():
                chosen.remove(i)
    source = "dense-pruned" if prune else "dense"
    return TargetSet(tuple(sorted(chosen)), source, insertion_order=tuple(chosen))


# ---------------------------------------------------------------------------
# Automorphisms
# ---------------------------------------------------------------------------

def permutation_cycles(sigma) -> list[tuple]:
    """Cycles of a permutation given as an array of images (0-indexed)."""
    sigma = np.asarray(sigma, dtype=int)
    n = sigma.shape[0]
    if sorted(sigma.tolist()) != list(range(n)):
        raise ValueError("not a permutation: images must be 0..N-1 exactly once")
    seen = np.zeros(n, dtype=bool)
    cycles = []
    for s in range(n):
        if seen[s]:
            continue
        cyc = []
        u = s
        while not seen[u]:
            seen[u] = True
            cyc.append(u)
            u = int(sigma[u])
        cycles.append(tuple(cyc))
    return cycles


def permutation_order(sigma) -> int:
    """Order of the cyclic group generated by the permutation."""
    return math.lcm(*(len(c) for c in permutation_cycles(sigma)))


def verify_automorphism(net: Network, sigma):
    """Check whether a permutation preserves the edge relation.

    Returns ``(True, orbits)`` with the orbit partition under the cyclic
    group generated by the permutation, or ``(False, None)``.
    """
    sigma = np.asarray(sigma, dtype=int)
    cycles = permutation_cycles(sigma)  # validates
    if sigma.shape[0] != net.node_count:
        raise ValueError("permutation length does not match node count")
    A = net.adjacency
    if not (A[np.ix_(sigma, sigma)] == A).all():
        return False, None
    orbits = sorted((tuple(sorted(c)) for c in cycles), key=lambda c: c[0])
    return True, orbits


def orbit_average(sigma, values) -> np.ndarray:
    """Average a per-node vector over the orbits of a permutation.

    The result assigns every node the mean of its orbit; iterating the
    permutation ``m`` times (its order) and averaging gives the same thing.
    """
    values = np.asarray(values, dtype=float)
    out = np.empty_like(values)
    for cyc in permutation_cycles(sigma):
        idx = list(cyc)
        out[idx] = values[idx].mean()
    return out
