"""Mixed graphs (directed + bidirected edges, possibly cyclic) and the
cluster-level constructions built on top of them: quotients, intervention
extensions, mutilation, and maximal compatible expansion.

Graphs are immutable after construction; every operation returns a new
graph. Set-valued results are emitted in vertex declaration order so that
downstream output is deterministic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

OBSERVED = "observed"
INTERVENTION = "intervention"

FORBID_ALL = "forbid-all"
ALLOW_CLUSTER_LEVEL = "allow-cluster-level"

INTERVENTION_PREFIX = "I_"

DEFAULT_LOOP_BOUND = 12


class GraphError(ValueError):
    """A graph construction or query violates an invariant."""


@dataclass(frozen=True)
class VertexId:
    """A vertex label plus its kind (observed or intervention)."""

    name: str
    kind: str = OBSERVED

    def __post_init__(self):
        if self.kind not in (OBSERVED, INTERVENTION):
            raise GraphError(f"unknown vertex kind {self.kind!r}")
        if self.kind == INTERVENTION and not self.name.startswith(INTERVENTION_PREFIX):
            raise GraphError(
                f"intervention vertex {self.name!r} must be named "
                f"{INTERVENTION_PREFIX!r} + target name"
            )


@dataclass(frozen=True)
class Step:
    """One traversed edge of a walk.

    ``tail``/``head`` are the edge as stored in the graph (for bidirected
    edges the canonical endpoint order); ``forward`` says whether a directed
    edge was traversed tail-to-head. Bidirected steps always carry
    ``forward=True``.
    """

    kind: str  # "directed" | "bidirected"
    tail: str
    head: str
    forward: bool = True

    def endpoints_as_traversed(self) -> tuple[str, str]:
        if self.kind == "directed" and not self.forward:
            return self.head, self.tail
        return self.tail, self.head

    def mark_at_source(self) -> str:
        """Edge mark at the vertex the step leaves ("head" or "tail")."""
        if self.kind == "bidirected":
            return "head"
        return "tail" if self.forward else "head"

    def mark_at_target(self) -> str:
        """Edge mark at the vertex the step enters."""
        if self.kind == "bidirected":
            return "head"
        return "head" if self.forward else "tail"


@dataclass(frozen=True)
class Walk:
    """A walk: vertices plus the traversed edges. May repeat both."""

    vertices: tuple[str, ...]
    steps: tuple[Step, ...]

    def __post_init__(self):
        if len(self.steps) != max(len(self.vertices) - 1, 0):
            raise GraphError("walk has mismatched vertex/step counts")

    def validate(self, graph: "MixedGraph") -> None:
        """Check the walk is a walk of ``graph``; raise GraphError if not."""
        for v in self.vertices:
            if not graph.has_vertex(v):
                raise GraphError(f"walk mentions unknown vertex {v!r}")
        for i, step in enumerate(self.steps):
            src, dst = step.endpoints_as_traversed()
            if src != self.vertices[i] or dst != self.vertices[i + 1]:
                raise GraphError(f"walk step {i} does not join its vertices")
            if step.kind == "directed":
                if not graph.has_directed(step.tail, step.head):
                    raise GraphError(f"walk uses missing edge {step.tail}->{step.head}")
            elif step.kind == "bidirected":
                if not graph.has_bidirected(step.tail, step.head):
                    raise GraphError(f"walk uses missing edge {step.tail}<->{step.head}")
            else:
                raise GraphError(f"unknown step kind {step.kind!r}")

    def to_json_dict(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "steps": [
                {
                    "from": s.endpoints_as_traversed()[0],
                    "to": s.endpoints_as_traversed()[1],
                    "edge": s.kind,
                    "traversed": "forward" if s.forward else "reverse",
                }
                for s in self.steps
            ],
        }


def _bidirected_key(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


class MixedGraph:
    """A directed mixed graph: directed and bidirected edges, cycles allowed.

    ``self_loop_policy`` is "forbid-all" for micro-level DMGs (an ioSCM
    variable never depends on itself) and "allow-cluster-level" for cluster
    graphs, whose vertices may carry self-loops.
    """

    def __init__(self, vertices=(), directed=(), bidirected=(),
                 self_loop_policy: str = FORBID_ALL):
        if self_loop_policy not in (FORBID_ALL, ALLOW_CLUSTER_LEVEL):
            raise GraphError(f"unknown self-loop policy {self_loop_policy!r}")
        self._policy = self_loop_policy
        self._order: list[str] = []
        self._kind: dict[str, str] = {}
        self._directed: set[tuple[str, str]] = set()
        self._bidirected: set[tuple[str, str]] = set()
        self._children: dict[str, set[str]] = {}
        self._parents: dict[str, set[str]] = {}
        self._spouses: dict[str, set[str]] = {}
        for v in vertices:
            self._add_vertex(v)
        for tail, head in directed:
            self._add_directed(tail, head)
        for a, b in bidirected:
            self._add_bidirected(a, b)
        self._scc_ids: dict[str, int] | None = None

    # --- construction (private: graphs are immutable once built) ---

    def _add_vertex(self, v) -> None:
        vid = v if isinstance(v, VertexId) else VertexId(str(v))
        if vid.name in self._kind:
            raise GraphError(f"duplicate vertex {vid.name!r}")
        self._order.append(vid.name)
        self._kind[vid.name] = vid.kind
        self._children[vid.name] = set()
        self._parents[vid.name] = set()
        self._spouses[vid.name] = set()

    def _check_endpoint(self, v: str) -> None:
        if v not in self._kind:
            raise GraphError(f"edge endpoint {v!r} is not a declared vertex")

    def _add_directed(self, tail: str, head: str) -> None:
        self._check_endpoint(tail)
        self._check_endpoint(head)
        if tail == head and self._policy == FORBID_ALL:
            raise GraphError(f"self-loop {tail}->{head} forbidden under {FORBID_ALL}")
        if self._kind[head] == INTERVENTION:
            raise GraphError(f"intervention vertex {head!r} cannot have incoming edges")
        self._directed.add((tail, head))
        self._children[tail].add(head)
        self._parents[head].add(tail)

    def _add_bidirected(self, a: str, b: str) -> None:
        self._check_endpoint(a)
        self._check_endpoint(b)
        if a == b and self._policy == FORBID_ALL:
            raise GraphError(f"self-loop {a}<->{b} forbidden under {FORBID_ALL}")
        for v in (a, b):
            if self._kind[v] == INTERVENTION:
                raise GraphError(f"intervention vertex {v!r} cannot have bidirected edges")
        self._bidirected.add(_bidirected_key(a, b))
        self._spouses[a].add(b)
        self._spouses[b].add(a)

    # --- basic accessors ---

    @property
    def self_loop_policy(self) -> str:
        return self._policy

    @property
    def vertices(self) -> tuple[str, ...]:
        return tuple(self._order)

    @property
    def vertex_ids(self) -> tuple[VertexId, ...]:
        return tuple(VertexId(v, self._kind[v]) for v in self._order)

    @property
    def directed_edges(self) -> tuple[tuple[str, str], ...]:
        return tuple(sorted(self._directed))

    @property
    def bidirected_edges(self) -> tuple[tuple[str, str], ...]:
        return tuple(sorted(self._bidirected))

    def has_vertex(self, v: str) -> bool:
        return v in self._kind

    def kind_of(self, v: str) -> str:
        self._require(v)
        return self._kind[v]

    def has_directed(self, tail: str, head: str) -> bool:
        return (tail, head) in self._directed

    def has_bidirected(self, a: str, b: str) -> bool:
        return _bidirected_key(a, b) in self._bidirected

    def children(self, v: str) -> tuple[str, ...]:
        self._require(v)
        return self._ordered(self._children[v])

    def parents(self, v: str) -> tuple[str, ...]:
        self._require(v)
        return self._ordered(self._parents[v])

    def spouses(self, v: str) -> tuple[str, ...]:
        self._require(v)
        return self._ordered(self._spouses[v])

    def _require(self, v: str) -> None:
        if v not in self._kind:
            raise GraphError(f"unknown vertex {v!r}")

    def _ordered(self, names) -> tuple[str, ...]:
        wanted = set(names)
        return tuple(v for v in self._order if v in wanted)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MixedGraph) or isinstance(other, ClusterGraph):
            return NotImplemented
        return (set(self._order) == set(other._order)
                and self._kind == other._kind
                and self._directed == other._directed
                and self._bidirected == other._bidirected)

    def __repr__(self) -> str:
        return (f"MixedGraph({len(self._order)} vertices, "
                f"{len(self._directed)} directed, {len(self._bidirected)} bidirected)")

    # --- reachability and strongly connected components ---

    def ancestors(self, of) -> tuple[str, ...]:
        """Reflexive-transitive closure along directed edges, backward."""
        return self._closure(of, self._parents)

    def descendants(self, of) -> tuple[str, ...]:
        """Reflexive-transitive closure along directed edges, forward."""
        return self._closure(of, self._children)

    def _closure(self, of, nbrs: dict[str, set[str]]) -> tuple[str, ...]:
        seeds = [of] if isinstance(of, str) else list(of)
        for v in seeds:
            self._require(v)
        seen = set(seeds)
        frontier = list(seeds)
        while frontier:
            v = frontier.pop()
            for u in nbrs[v]:
                if u not in seen:
                    seen.add(u)
                    frontier.append(u)
        return self._ordered(seen)

    def scc_of(self, v: str) -> tuple[str, ...]:
        """The strongly connected component of ``v``: An(v) ∩ De(v)."""
        self._require(v)
        ids = self.scc_ids()
        mine = ids[v]
        return self._ordered(u for u in self._order if ids[u] == mine)

    def sccs(self) -> tuple[tuple[str, ...], ...]:
        ids = self.scc_ids()
        by_id: dict[int, list[str]] = {}
        for v in self._order:
            by_id.setdefault(ids[v], []).append(v)
        comps = [tuple(members) for members in by_id.values()]
        comps.sort(key=lambda c: self._order.index(c[0]))
        return tuple(comps)

    def scc_ids(self) -> dict[str, int]:
        """Map vertex -> component id (iterative Tarjan, cached)."""
        if self._scc_ids is None:
            self._scc_ids = _tarjan(self._order, self._children)
        return dict(self._scc_ids)

    def is_acyclic(self, ignore_self_loops: bool = False) -> bool:
        ids = self.scc_ids()
        counts: dict[int, int] = {}
        for v in self._order:
            counts[ids[v]] = counts.get(ids[v], 0) + 1
        if any(c > 1 for c in counts.values()):
            return False
        if not ignore_self_loops and any(t == h for t, h in self._directed):
            return False
        return True

    def enumerate_loops(self, bound: int = DEFAULT_LOOP_BOUND) -> tuple[tuple[str, ...], ...]:
        """All loops: vertex sets whose induced subgraph is strongly connected.

        Exponential; refuses graphs larger than ``bound`` vertices.
        """
        if len(self._order) > bound:
            raise GraphError(
                f"loop enumeration bound exceeded: {len(self._order)} vertices > {bound}")
        pos = {v: i for i, v in enumerate(self._order)}
        loops: list[tuple[str, ...]] = [(v,) for v in self._order]
        for comp in self.sccs():
            if len(comp) < 2:
                continue
            for size in range(2, len(comp) + 1):
                for subset in itertools.combinations(comp, size):
                    if self._strongly_connected(set(subset)):
                        loops.append(subset)
        loops.sort(key=lambda s: (len(s), tuple(pos[v] for v in s)))
        return tuple(loops)

    def _strongly_connected(self, subset: set[str]) -> bool:
        start = next(iter(subset))
        for nbrs in (self._children, self._parents):
            seen = {start}
            frontier = [start]
            while frontier:
                v = frontier.pop()
                for u in nbrs[v]:
                    if u in subset and u not in seen:
                        seen.add(u)
                        frontier.append(u)
            if seen != subset:
                return False
        return True

    # --- structural constructions ---

    def intervene(self, targets) -> "MixedGraph":
        """Remove every edge going into ``targets``: directed edges with head
        there and bidirected edges touching them. Vertices are preserved."""
        zset = self._as_vertex_set(targets)
        directed = [(t, h) for t, h in sorted(self._directed) if h not in zset]
        bidirected = [(a, b) for a, b in sorted(self._bidirected)
                      if a not in zset and b not in zset]
        return MixedGraph(self.vertex_ids, directed, bidirected, self._policy)

    def extend(self, targets) -> "MixedGraph":
        """Add an intervention vertex I_t and the edge I_t -> t per target."""
        tset = self._as_vertex_set(targets)
        new_vertices = list(self.vertex_ids)
        new_directed = list(sorted(self._directed))
        for t in [v for v in self._order if v in tset]:
            if self._kind[t] == INTERVENTION:
                raise GraphError(f"cannot extend intervention vertex {t!r}")
            iname = INTERVENTION_PREFIX + t
            if iname in self._kind:
                raise GraphError(f"duplicate extension: {iname!r} already present")
            new_vertices.append(VertexId(iname, INTERVENTION))
            new_directed.append((iname, t))
        return MixedGraph(new_vertices, new_directed, sorted(self._bidirected), self._policy)

    def without(self, removed) -> "MixedGraph":
        """Subgraph with ``removed`` vertices (and their edges) deleted."""
        rset = self._as_vertex_set(removed)
        keep = [vid for vid in self.vertex_ids if vid.name not in rset]
        directed = [(t, h) for t, h in sorted(self._directed)
                    if t not in rset and h not in rset]
        bidirected = [(a, b) for a, b in sorted(self._bidirected)
                      if a not in rset and b not in rset]
        return MixedGraph(keep, directed, bidirected, self._policy)

    def induced(self, keep) -> "MixedGraph":
        kset = self._as_vertex_set(keep)
        return self.without([v for v in self._order if v not in kset])

    def _as_vertex_set(self, vs) -> set[str]:
        vset = {vs} if isinstance(vs, str) else set(vs)
        for v in vset:
            self._require(v)
        return vset


def _tarjan(order: list[str], children: dict[str, set[str]]) -> dict[str, int]:
    index: dict[str, int] = {}
    lowlink: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    ids: dict[str, int] = {}
    counter = itertools.count()
    comp_counter = itertools.count()

    for root in order:
        if root in index:
            continue
        # iterative DFS; work items are (vertex, iterator over sorted children)
        work = [(root, None)]
        while work:
            v, it = work[-1]
            if it is None:
                index[v] = lowlink[v] = next(counter)
                stack.append(v)
                on_stack.add(v)
                it = iter(sorted(children[v]))
                work[-1] = (v, it)
            advanced = False
            for w in it:
                if w not in index:
                    work.append((w, None))
                    advanced = True
                    break
                if w in on_stack:
                    lowlink[v] = min(lowlink[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[v])
            if lowlink[v] == index[v]:
                cid = next(comp_counter)
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    ids[w] = cid
                    if w == v:
                        break
    return ids


class ClusterPartition:
    """A partition of micro vertices into named clusters.

    Member sets may be unknown (None) for partially specified graphs; sizes
    may be declared separately when micro identities are unknown.
    """

    def __init__(self, clusters, sizes=None):
        self._members: dict[str, tuple[str, ...] | None] = {}
        seen: set[str] = set()
        for name, members in dict(clusters).items():
            if members is None:
                self._members[name] = None
                continue
            members = tuple(members)
            if not members:
                raise GraphError(f"cluster {name!r} has an empty member set")
            overlap = seen.intersection(members)
            if overlap:
                raise GraphError(f"clusters overlap on {sorted(overlap)}")
            if len(set(members)) != len(members):
                raise GraphError(f"cluster {name!r} repeats a member")
            seen.update(members)
            self._members[name] = members
        self._sizes: dict[str, int] = {}
        for name, size in dict(sizes or {}).items():
            if name not in self._members:
                raise GraphError(f"size declared for unknown cluster {name!r}")
            if not isinstance(size, int) or size < 1:
                raise GraphError(f"cluster {name!r} size must be a positive integer")
            members = self._members[name]
            if members is not None and len(members) != size:
                raise GraphError(
                    f"cluster {name!r} declares size {size} but has {len(members)} members")
            self._sizes[name] = size

    @property
    def cluster_names(self) -> tuple[str, ...]:
        return tuple(self._members)

    def members(self, name: str) -> tuple[str, ...] | None:
        if name not in self._members:
            raise GraphError(f"unknown cluster {name!r}")
        return self._members[name]

    def size_of(self, name: str) -> int | None:
        """Declared or derived cluster size; None when unknown."""
        if name in self._sizes:
            return self._sizes[name]
        members = self.members(name)
        return len(members) if members is not None else None

    @property
    def declared_sizes(self) -> dict[str, int]:
        return dict(self._sizes)

    def all_members(self) -> tuple[str, ...]:
        out: list[str] = []
        for name, members in self._members.items():
            if members is not None:
                out.extend(members)
        return tuple(out)

    def cluster_of_map(self) -> dict[str, str]:
        mapping: dict[str, str] = {}
        for name, members in self._members.items():
            for m in members or ():
                mapping[m] = name
        return mapping

    def __eq__(self, other) -> bool:
        if not isinstance(other, ClusterPartition):
            return NotImplemented
        return (dict(self._members) == dict(other._members)
                and self._sizes == other._sizes)

    def __repr__(self) -> str:
        return f"ClusterPartition({list(self._members)})"


class ClusterGraph:
    """A cluster-level mixed graph: a MixedGraph over cluster vertices (with
    self-loops permitted) plus the partition naming those clusters."""

    def __init__(self, graph: MixedGraph, partition: ClusterPartition):
        if graph.self_loop_policy != ALLOW_CLUSTER_LEVEL:
            raise GraphError("cluster graphs require the allow-cluster-level policy")
        if set(graph.vertices) != set(partition.cluster_names):
            raise GraphError("partition cluster names must equal the graph's vertices")
        self.graph = graph
        self.partition = partition

    # delegated read access, so cluster graphs quack like mixed graphs
    @property
    def vertices(self):
        return self.graph.vertices

    @property
    def directed_edges(self):
        return self.graph.directed_edges

    @property
    def bidirected_edges(self):
        return self.graph.bidirected_edges

    def has_vertex(self, v):
        return self.graph.has_vertex(v)

    def kind_of(self, v):
        return self.graph.kind_of(v)

    def scc_of(self, v):
        return self.graph.scc_of(v)

    def sccs(self):
        return self.graph.sccs()

    def ancestors(self, of):
        return self.graph.ancestors(of)

    def descendants(self, of):
        return self.graph.descendants(of)

    def children(self, v):
        return self.graph.children(v)

    def parents(self, v):
        return self.graph.parents(v)

    def spouses(self, v):
        return self.graph.spouses(v)

    def enumerate_loops(self, bound: int = DEFAULT_LOOP_BOUND):
        return self.graph.enumerate_loops(bound)

    def intervene(self, targets) -> "ClusterGraph":
        return ClusterGraph(self.graph.intervene(targets), self.partition)

    def extend(self, targets) -> "ClusterGraph":
        """Extend the graph and the partition together: the fresh cluster I_C
        groups the micro intervention vertices of C's members."""
        extended = self.graph.extend(targets)
        clusters: dict[str, tuple[str, ...] | None] = {
            c: self.partition.members(c) for c in self.partition.cluster_names}
        sizes = self.partition.declared_sizes
        tset = {targets} if isinstance(targets, str) else set(targets)
        for c in self.graph.vertices:
            if c not in tset:
                continue
            members = self.partition.members(c)
            iname = INTERVENTION_PREFIX + c
            clusters[iname] = None if members is None else tuple(
                INTERVENTION_PREFIX + m for m in members)
            if c in sizes:
                sizes[iname] = sizes[c]
        return ClusterGraph(extended, ClusterPartition(clusters, sizes))

    def maximal_compatible(self, sizes=None) -> tuple[MixedGraph, ClusterPartition]:
        return maximal_compatible(self, sizes)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ClusterGraph):
            return NotImplemented
        return self.graph == other.graph and self.partition == other.partition

    def __repr__(self) -> str:
        return f"ClusterGraph({len(self.vertices)} clusters)"


def underlying(g) -> MixedGraph:
    """The MixedGraph carried by either graph kind."""
    return g.graph if isinstance(g, ClusterGraph) else g


def quotient(dmg: MixedGraph, partition: ClusterPartition) -> ClusterGraph:
    """Collapse a micro DMG into its cluster graph: the edge C_i -> C_j
    (resp. <->) is present iff some micro edge crosses those clusters."""
    if any(dmg.kind_of(v) == INTERVENTION for v in dmg.vertices):
        raise GraphError("quotient expects a graph without intervention vertices")
    cluster_of = partition.cluster_of_map()
    missing = [v for v in dmg.vertices if v not in cluster_of]
    if missing:
        raise GraphError(f"partition does not cover vertices {missing}")
    extra = [m for m in partition.all_members() if not dmg.has_vertex(m)]
    if extra:
        raise GraphError(f"partition mentions unknown vertices {extra}")
    directed = sorted({(cluster_of[t], cluster_of[h]) for t, h in dmg.directed_edges})
    bidirected = sorted({_bidirected_key(cluster_of[a], cluster_of[b])
                         for a, b in dmg.bidirected_edges})
    cg = MixedGraph(partition.cluster_names, directed, bidirected,
                    self_loop_policy=ALLOW_CLUSTER_LEVEL)
    return ClusterGraph(cg, partition)


def _generated_members(cluster: str, size: int) -> tuple[str, ...]:
    return tuple(f"{cluster}#{i}" for i in range(1, size + 1))


def maximal_compatible(cg: ClusterGraph, sizes=None) -> tuple[MixedGraph, ClusterPartition]:
    """The micro DMG holding every edge any compatible DMG may hold: all
    cross-cluster pairs for each cluster edge, and all distinct-member pairs
    for cluster self-loops. Quotienting the result returns ``cg``."""
    resolved: dict[str, int] = {}
    given = dict(sizes or {})
    for c in cg.vertices:
        size = given.get(c, cg.partition.size_of(c))
        if size is None:
            raise GraphError(f"cluster {c!r} has no size; maximal_compatible needs one")
        if not isinstance(size, int) or size < 1:
            raise GraphError(f"cluster {c!r} size must be a positive integer")
        resolved[c] = size
    for c in cg.vertices:
        if resolved[c] == 1 and (cg.graph.has_directed(c, c) or cg.graph.has_bidirected(c, c)):
            raise GraphError(
                f"cluster {c!r} carries a self-loop, so its size must be at least 2")

    members: dict[str, tuple[str, ...]] = {}
    vertex_ids: list[VertexId] = []
    for c in cg.vertices:
        known = cg.partition.members(c)
        ms = known if known is not None and len(known) == resolved[c] \
            else _generated_members(c, resolved[c])
        members[c] = ms
        kind = cg.kind_of(c)
        vertex_ids.extend(VertexId(m, kind) for m in ms)

    directed: set[tuple[str, str]] = set()
    for tc, hc in cg.directed_edges:
        for t in members[tc]:
            for h in members[hc]:
                if t != h:
                    directed.add((t, h))
    bidirected: set[tuple[str, str]] = set()
    for ac, bc in cg.bidirected_edges:
        for a in members[ac]:
            for b in members[bc]:
                if a != b:
                    bidirected.add(_bidirected_key(a, b))

    graph = MixedGraph(vertex_ids, sorted(directed), sorted(bidirected),
                       self_loop_policy=FORBID_ALL)
    partition = ClusterPartition({c: members[c] for c in cg.vertices})
    return graph, partition
