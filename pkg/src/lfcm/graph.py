"""DAG and latent-factor model structures with exact separation oracles.

The Lfcm type encodes the bipartite latent factor causal model: every
observed node has exactly one latent parent, and the only other edges
run from observed nodes into latent nodes. Conditions that the type
cannot make unrepresentable (three children per latent, two observed
parents behind every latent edge, acyclicity of the induced full graph)
are checked by validate_lfcm, which reports violations as data.

d_separated and t_separated are exact oracles used by tests and by the
oracle baseline; discovery itself never calls them.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import GraphTooLarge, InvalidData

# Hard cap for the trek-separation oracle; it is test scaffolding and
# subset search above this size is not worth supporting.
_TSEP_NODE_LIMIT = 14


@dataclass(frozen=True)
class Dag:
    """Directed acyclic graph over nodes 0..node_count-1."""

    node_count: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        if self.node_count < 0:
            raise InvalidData(f"node_count must be non-negative, got {self.node_count}")
        edges = frozenset((int(u), int(v)) for u, v in self.edges)
        object.__setattr__(self, "edges", edges)
        for u, v in edges:
            if not (0 <= u < self.node_count and 0 <= v < self.node_count):
                raise InvalidData(f"edge ({u}, {v}) out of range for {self.node_count} nodes")
            if u == v:
                raise InvalidData(f"self-loop at node {u}")
        order = _kahn_order(self.node_count, edges)
        if order is None:
            raise InvalidData("edge set contains a directed cycle")
        object.__setattr__(self, "_topo", tuple(order))

    def parents_of(self, v: int) -> list[int]:
        return sorted(u for u, w in self.edges if w == v)

    def children_of(self, u: int) -> list[int]:
        return sorted(w for v, w in self.edges if v == u)

    def topological_order(self) -> list[int]:
        """Topological order, lowest index first among ready nodes."""
        return list(self._topo)


def _kahn_order(n: int, edges: frozenset[tuple[int, int]]) -> list[int] | None:
    """Kahn's algorithm with a min-heap; None when a cycle blocks it."""
    indegree = [0] * n
    out: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        out[u].append(v)
        indegree[v] += 1
    ready = [v for v in range(n) if indegree[v] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        v = heapq.heappop(ready)
        order.append(v)
        for w in out[v]:
            indegree[w] -= 1
            if indegree[w] == 0:
                heapq.heappush(ready, w)
    return order if len(order) == n else None


def _reachable(g: Dag, starts: set[int], avoid: set[int], reverse: bool) -> set[int]:
    """Nodes with a directed path to (or from) starts that avoids `avoid`.

    Reachability is reflexive: start nodes outside `avoid` are included.
    """
    step: dict[int, list[int]] = {v: [] for v in range(g.node_count)}
    for u, v in g.edges:
        if reverse:
            step[v].append(u)
        else:
            step[u].append(v)
    seen = set(s for s in starts if s not in avoid)
    frontier = list(seen)
    while frontier:
        v = frontier.pop()
        for w in step[v]:
            if w not in seen and w not in avoid:
                seen.add(w)
                frontier.append(w)
    return seen


def ancestors(g: Dag, nodes) -> set[int]:
    """All nodes with a directed path into `nodes`, including `nodes`."""
    return _reachable(g, set(nodes), set(), reverse=True)


def descendants(g: Dag, nodes) -> set[int]:
    """All nodes reachable from `nodes` by directed paths, including `nodes`."""
    return _reachable(g, set(nodes), set(), reverse=False)


@dataclass(frozen=True)
class Lfcm:
    """Latent factor causal model over K latent and p observed nodes.

    cluster_of[i] is the unique latent parent of observed node i, and
    obs_to_latent holds the (observed, latent) edges. Observed nodes and
    latent nodes are indexed separately, each from zero. Construction
    checks only representability; Definition-1 validity (three children
    per latent, doubly-parented latent edges, acyclicity) is reported by
    validate_lfcm.
    """

    num_latent: int
    num_observed: int
    cluster_of: tuple[int, ...]
    obs_to_latent: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        if self.num_latent < 1:
            raise InvalidData(f"need at least one latent node, got {self.num_latent}")
        if self.num_observed < 1:
            raise InvalidData(f"need at least one observed node, got {self.num_observed}")
        cluster_of = tuple(int(k) for k in self.cluster_of)
        object.__setattr__(self, "cluster_of", cluster_of)
        if len(cluster_of) != self.num_observed:
            raise InvalidData(
                f"cluster_of has length {len(cluster_of)}, expected {self.num_observed}"
            )
        for i, k in enumerate(cluster_of):
            if not 0 <= k < self.num_latent:
                raise InvalidData(f"cluster_of[{i}] = {k} is not a latent index")
        edges = frozenset((int(i), int(k)) for i, k in self.obs_to_latent)
        object.__setattr__(self, "obs_to_latent", edges)
        for i, k in edges:
            if not 0 <= i < self.num_observed:
                raise InvalidData(f"observed index {i} out of range in obs_to_latent")
            if not 0 <= k < self.num_latent:
                raise InvalidData(f"latent index {k} out of range in obs_to_latent")

    def children(self, k: int) -> list[int]:
        """Observed children of latent k, ascending."""
        return [i for i, c in enumerate(self.cluster_of) if c == k]

    def clusters(self) -> list[frozenset[int]]:
        """Observed children per latent, indexed by latent node."""
        return [frozenset(self.children(k)) for k in range(self.num_latent)]


@dataclass(frozen=True)
class OrderedClustering:
    """Ordered list of disjoint nonempty observed-index clusters."""

    clusters: tuple[frozenset[int], ...]

    def __post_init__(self) -> None:
        clusters = tuple(frozenset(int(i) for i in c) for c in self.clusters)
        object.__setattr__(self, "clusters", clusters)
        seen: set[int] = set()
        for c in clusters:
            if not c:
                raise InvalidData("clusters must be nonempty")
            if min(c) < 0:
                raise InvalidData("negative observed index in cluster")
            if seen & c:
                raise InvalidData("clusters must be pairwise disjoint")
            seen |= c

    def __len__(self) -> int:
        return len(self.clusters)


@dataclass(frozen=True)
class Violation:
    """One failed Definition-1 condition, naming the offending nodes."""

    condition: str
    nodes: tuple[int, ...]


def _latent_edge_support(g: Lfcm) -> dict[tuple[int, int], int]:
    """Latent edges k -> k' with the number of observed parents behind each."""
    support: dict[tuple[int, int], int] = {}
    for i, kp in sorted(g.obs_to_latent):
        k = g.cluster_of[i]
        support[(k, kp)] = support.get((k, kp), 0) + 1
    return support


def latent_graph(g: Lfcm) -> Dag:
    """The latent graph: edge k -> k' iff a child of L_k points into L_k'."""
    return Dag(g.num_latent, frozenset(_latent_edge_support(g)))


def full_graph(g: Lfcm) -> Dag:
    """The induced full DAG, latents first: L_k -> k, X_i -> num_latent + i."""
    K = g.num_latent
    edges = {(g.cluster_of[i], K + i) for i in range(g.num_observed)}
    edges |= {(K + i, k) for i, k in g.obs_to_latent}
    return Dag(K + g.num_observed, frozenset(edges))


def validate_lfcm(g: Lfcm) -> list[Violation]:
    """Check the Definition-1 conditions the Lfcm type cannot enforce.

    Returns one violation per failure: "triple-child" for a latent with
    fewer than 3 children, "double-parent" for a latent edge backed by a
    single observed parent, and "acyclic" when the induced full graph
    (equivalently the latent graph) has a directed cycle.
    """
    violations = []
    for k in range(g.num_latent):
        if len(g.children(k)) < 3:
            violations.append(Violation("triple-child", (k,)))
    support = _latent_edge_support(g)
    for (k, kp), count in sorted(support.items()):
        if k == kp or count < 2:
            violations.append(Violation("double-parent", (k, kp)))
    proper = frozenset((k, kp) for k, kp in support if k != kp)
    if _kahn_order(g.num_latent, proper) is None:
        violations.append(Violation("acyclic", tuple(range(g.num_latent))))
    return violations


def d_separated(g: Dag, i: int, j: int, C) -> bool:
    """Exact d-separation of nodes i and j given conditioning set C.

    Uses the moralized-ancestral-graph criterion: i and j are
    d-separated given C iff they are disconnected in the moral graph of
    the ancestral closure of {i, j} | C after deleting C.

    Args:
      g: the DAG.
      i, j: distinct query nodes, neither in C.
      C: conditioning node set (may be empty).

    Returns:
      True iff every path between i and j is blocked given C.
    """
    C = {int(c) for c in C}
    i, j = int(i), int(j)
    if i == j:
        raise InvalidData("d-separation needs two distinct nodes")
    if i in C or j in C:
        raise InvalidData("query nodes must not appear in the conditioning set")
    for v in {i, j} | C:
        if not 0 <= v < g.node_count:
            raise InvalidData(f"node {v} out of range for {g.node_count} nodes")
    relevant = ancestors(g, {i, j} | C)
    neighbors: dict[int, set[int]] = {v: set() for v in relevant}
    for u, v in g.edges:
        if u in relevant and v in relevant:
            neighbors[u].add(v)
            neighbors[v].add(u)
    for v in relevant:
        pars = [u for u, w in g.edges if w == v and u in relevant]
        for a, b in combinations(pars, 2):
            neighbors[a].add(b)
            neighbors[b].add(a)
    seen = {i}
    frontier = [i]
    while frontier:
        v = frontier.pop()
        for w in neighbors[v]:
            if w == j:
                return False
            if w not in seen and w not in C:
                seen.add(w)
                frontier.append(w)
    return True


def _check_tsep_size(g: Dag) -> None:
    if g.node_count > _TSEP_NODE_LIMIT:
        raise GraphTooLarge(
            f"trek-separation oracle supports at most {_TSEP_NODE_LIMIT} nodes, "
            f"got {g.node_count}"
        )


def t_separated(g: Dag, A, B, CA, CB) -> bool:
    """Exact trek separation of A from B by the pair (CA, CB).

    A trek from A to B is a pair of directed paths out of one source
    node, the first ending in A and the second in B. (CA, CB) t-separates
    when every trek has its A-side path meeting CA or its B-side path
    meeting CB. Since the two paths of a trek are chosen independently
    given the source, this holds iff no node reaches A around CA and also
    reaches B around CB; the oracle checks that by two reachability
    sweeps. Test scaffolding only, capped at 14 nodes.

    Args:
      g: the DAG (at most 14 nodes).
      A, B: endpoint node sets; need not be disjoint.
      CA, CB: blocking sets for the A side and the B side.

    Returns:
      True iff (CA, CB) t-separates A from B.
    """
    _check_tsep_size(g)
    A, B = {int(v) for v in A}, {int(v) for v in B}
    CA, CB = {int(v) for v in CA}, {int(v) for v in CB}
    for v in A | B | CA | CB:
        if not 0 <= v < g.node_count:
            raise InvalidData(f"node {v} out of range for {g.node_count} nodes")
    open_a = _reachable(g, A, CA, reverse=True)
    open_b = _reachable(g, B, CB, reverse=True)
    return not (open_a & open_b)


def min_tsep_rank_bound(g: Dag, A, B) -> int:
    """Smallest |CA| + |CB| over all t-separating pairs (CA, CB).

    By trek separation this is the generic rank of the covariance
    submatrix sigma[A, B] under a linear SCM on g. Exhaustive subset
    search over ancestors of A and of B; test oracle only, capped at 14
    nodes.
    """
    _check_tsep_size(g)
    A, B = {int(v) for v in A}, {int(v) for v in B}
    anc_a = sorted(ancestors(g, A))
    anc_b = sorted(ancestors(g, B))
    for size in range(min(len(A), len(B)) + 1):
        for size_a in range(size + 1):
            for ca in combinations(anc_a, size_a):
                for cb in combinations(anc_b, size - size_a):
                    if t_separated(g, A, B, ca, cb):
                        return size
    return min(len(A), len(B))


def greedy_clique(adj: np.ndarray) -> set[int]:
    """Greedy maximal clique of an undirected graph.

    Seeds with the highest-degree node (lowest index on ties), then
    repeatedly adds the lowest-index node adjacent to every current
    member. Deterministic stand-in for the largest-clique step, which
    the clustering procedure does not rely on.

    Args:
      adj: square symmetric boolean adjacency matrix; the diagonal is
        ignored.

    Returns:
      The grown clique as a set of node indices; empty for an empty graph.
    """
    adj = np.asarray(adj, dtype=bool)
    if adj.size == 0:
        return set()
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise InvalidData(f"adjacency matrix must be square, got shape {adj.shape}")
    if not np.array_equal(adj, adj.T):
        raise InvalidData("adjacency matrix must be symmetric")
    adj = adj.copy()
    np.fill_diagonal(adj, False)
    seed = int(np.argmax(adj.sum(axis=1)))
    clique = [seed]
    compatible = adj[seed].copy()
    while compatible.any():
        nxt = int(np.argmax(compatible))
        clique.append(nxt)
        compatible &= adj[nxt]
    return set(clique)


def lfcm_to_json_dict(g: Lfcm, observed_names) -> dict:
    """JSON-ready dict with fields num_latent, observed_names, cluster_of, obs_to_latent."""
    names = [str(s) for s in observed_names]
    if len(names) != g.num_observed:
        raise InvalidData(
            f"got {len(names)} observed names for {g.num_observed} observed nodes"
        )
    return {
        "num_latent": g.num_latent,
        "observed_names": names,
        "cluster_of": list(g.cluster_of),
        "obs_to_latent": [list(e) for e in sorted(g.obs_to_latent)],
    }


def lfcm_from_json_dict(obj: dict) -> tuple[Lfcm, tuple[str, ...]]:
    """Inverse of lfcm_to_json_dict; returns the model and observed names."""
    try:
        num_latent = int(obj["num_latent"])
        names = tuple(str(s) for s in obj["observed_names"])
        cluster_of = tuple(int(k) for k in obj["cluster_of"])
        edges = frozenset((int(i), int(k)) for i, k in obj["obs_to_latent"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidData(f"malformed LFCM object: {exc}") from exc
    g = Lfcm(num_latent, len(cluster_of), cluster_of, edges)
    if len(names) != g.num_observed:
        raise InvalidData(
            f"got {len(names)} observed names for {g.num_observed} observed nodes"
        )
    return g, names
