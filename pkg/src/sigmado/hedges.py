"""C-components, C-forests, hedge search, SC-projection, and the SC-hedge
non-identifiability certificate.

A hedge for (x, y) is a pair of R-rooted C-forests F' ⊆ F, where F touches
x, F' avoids it, and R ⊆ An(y) in the graph with x removed. The search is
exhaustive over root sets (by size, then lexicographic) and over forest
vertex sets, pruned by C-component membership and the forest degree
constraints; it is exponential and therefore capped by a vertex bound.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

from .graphs import (
    ALLOW_CLUSTER_LEVEL,
    ClusterGraph,
    GraphError,
    MixedGraph,
    _bidirected_key,
    underlying,
)

DEFAULT_HEDGE_BOUND = 12


@dataclass(frozen=True)
class EdgeSubgraph:
    """A chosen vertex set plus chosen edges of some host graph."""

    vertices: tuple[str, ...]
    directed: tuple[tuple[str, str], ...]
    bidirected: tuple[tuple[str, str], ...]

    def as_graph(self) -> MixedGraph:
        return MixedGraph(self.vertices, self.directed, self.bidirected,
                          self_loop_policy=ALLOW_CLUSTER_LEVEL)

    def contains(self, other: "EdgeSubgraph") -> bool:
        return (set(other.vertices) <= set(self.vertices)
                and set(other.directed) <= set(self.directed)
                and set(other.bidirected) <= set(self.bidirected))

    def to_json_dict(self) -> dict:
        return {"vertices": list(self.vertices),
                "directed": [list(e) for e in self.directed],
                "bidirected": [list(e) for e in self.bidirected]}


@dataclass(frozen=True)
class HedgeCertificate:
    """Roots plus the two nested C-forests witnessing non-identifiability.

    ``size_condition_met`` reports the soundness side condition (every
    cluster inside a cycle has size at least 2): True/False when sizes are
    declared, None when unknown — the verdict is then conditional.
    """

    roots: tuple[str, ...]
    forest_f: EdgeSubgraph
    forest_f_prime: EdgeSubgraph
    projection_used: bool = False
    size_condition_met: bool | None = None

    def to_json_dict(self) -> dict:
        return {
            "roots": list(self.roots),
            "forest_f": self.forest_f.to_json_dict(),
            "forest_f_prime": self.forest_f_prime.to_json_dict(),
            "projection_used": self.projection_used,
            "size_condition_met": self.size_condition_met,
        }


def c_components(g) -> tuple[tuple[str, ...], ...]:
    """Connected components of the bidirected-edge skeleton."""
    mg = underlying(g)
    seen: set[str] = set()
    comps: list[tuple[str, ...]] = []
    for v in mg.vertices:
        if v in seen:
            continue
        comp = {v}
        frontier = [v]
        while frontier:
            u = frontier.pop()
            for s in mg.spouses(u):
                if s not in comp:
                    comp.add(s)
                    frontier.append(s)
        seen |= comp
        comps.append(tuple(x for x in mg.vertices if x in comp))
    return tuple(comps)


def is_c_forest(g, roots) -> bool:
    """Acyclic, every vertex has at most one child, a single C-component,
    and the childless vertices are exactly ``roots``."""
    mg = underlying(g)
    rset = {roots} if isinstance(roots, str) else set(roots)
    if not set(rset) <= set(mg.vertices):
        return False
    if not mg.is_acyclic(ignore_self_loops=False):
        return False
    childless = set()
    for v in mg.vertices:
        kids = mg.children(v)
        if len(kids) > 1:
            return False
        if not kids:
            childless.add(v)
    if childless != rset:
        return False
    return len(c_components(mg)) == 1


def sc_projection(cg: ClusterGraph) -> ClusterGraph:
    """Add a bidirected edge between every pair of distinct clusters sharing
    a strongly connected component. Idempotent; acyclic inputs unchanged."""
    mg = underlying(cg)
    ids = mg.scc_ids()
    added = set(mg.bidirected_edges)
    for a, b in itertools.combinations(mg.vertices, 2):
        if ids[a] == ids[b]:
            added.add(_bidirected_key(a, b))
    projected = MixedGraph(mg.vertex_ids, mg.directed_edges, sorted(added),
                           self_loop_policy=ALLOW_CLUSTER_LEVEL)
    return ClusterGraph(projected, cg.partition)


def _reaches_within(pool: set[str], sinks: set[str], edges) -> set[str]:
    """Vertices of ``pool`` with a directed path (through ``pool``) to
    ``sinks``; the sinks themselves never relay (no out-edges in a forest)."""
    reach = set(sinks)
    changed = True
    while changed:
        changed = False
        for t, h in edges:
            if t in pool and t not in reach and h in reach:
                reach.add(t)
                changed = True
    return reach


def _bidirected_connected(vertices: set[str], spouse_pairs) -> bool:
    if not vertices:
        return False
    start = next(iter(vertices))
    seen = {start}
    frontier = [start]
    adj: dict[str, set[str]] = {v: set() for v in vertices}
    for a, b in spouse_pairs:
        if a in vertices and b in vertices and a != b:
            adj[a].add(b)
            adj[b].add(a)
    while frontier:
        v = frontier.pop()
        for u in adj[v]:
            if u not in seen:
                seen.add(u)
                frontier.append(u)
    return seen == vertices


def _child_map(vertices: set[str], sinks: set[str], edges) -> dict[str, str]:
    """Canonical child per non-sink vertex: step along a shortest directed
    path toward ``sinks``, lex-smallest tie-break. Assumes reachability;
    distances strictly decrease along children, so the result is acyclic."""
    dist = {v: 0 for v in sinks}
    changed = True
    while changed:
        changed = False
        for t, h in edges:
            if t in vertices and t not in sinks and h in dist:
                cand = dist[h] + 1
                if t not in dist or cand < dist[t]:
                    dist[t] = cand
                    changed = True
    child: dict[str, str] = {}
    for v in sorted(vertices - sinks):
        best = None
        for t, h in edges:
            if t == v and h in dist and dist[h] == dist[v] - 1:
                if best is None or h < best:
                    best = h
        assert best is not None
        child[v] = best
    return child


def find_hedge(g, x, y, bound: int = DEFAULT_HEDGE_BOUND) -> HedgeCertificate | None:
    """Exhaustive hedge search; returns the first certificate in canonical
    order (roots by size then lexicographic) or None."""
    mg = underlying(g)
    if len(mg.vertices) > bound:
        raise GraphError(
            f"hedge search bound exceeded: {len(mg.vertices)} vertices > {bound}")
    xset = frozenset([x] if isinstance(x, str) else x)
    yset = frozenset([y] if isinstance(y, str) else y)
    for v in xset | yset:
        if not mg.has_vertex(v):
            raise GraphError(f"unknown vertex {v!r}")
    if xset & yset:
        raise GraphError("x and y must be disjoint")

    ancestry = set(mg.without(xset).ancestors(yset))
    cc_of: dict[str, int] = {}
    for i, comp in enumerate(c_components(mg)):
        for v in comp:
            cc_of[v] = i
    # forests never use self-loops (a self-loop is a cycle / its own spouse)
    directed = [(t, h) for t, h in mg.directed_edges if t != h]
    bidirected = [(a, b) for a, b in mg.bidirected_edges if a != b]

    candidates = sorted(ancestry)
    for r_size in range(1, len(candidates) + 1):
        for roots in itertools.combinations(candidates, r_size):
            rset = set(roots)
            comp_ids = {cc_of[r] for r in roots}
            if len(comp_ids) != 1:
                continue
            component = {v for v, i in cc_of.items() if i in comp_ids}
            if not component & xset:
                continue
            cert = _search_forests(rset, component, xset, directed, bidirected)
            if cert is not None:
                return cert
    return None


def _search_forests(rset, component, xset, directed, bidirected):
    roots = tuple(sorted(rset))
    prime_pool = sorted((component - xset) - rset)
    for p_size in range(0, len(prime_pool) + 1):
        for extra_prime in itertools.combinations(prime_pool, p_size):
            v_prime = rset | set(extra_prime)
            reach = _reaches_within(v_prime, rset, directed)
            if not v_prime <= reach:
                continue
            if not _bidirected_connected(v_prime, bidirected):
                continue
            ext_pool = sorted(component - v_prime)
            for e_size in range(1, len(ext_pool) + 1):
                for extras in itertools.combinations(ext_pool, e_size):
                    eset = set(extras)
                    if not eset & xset:
                        continue
                    v_f = v_prime | eset
                    # extras need directed paths into F' using extras only
                    reach2 = _reaches_within(eset, v_prime, directed)
                    if not eset <= reach2:
                        continue
                    if not _bidirected_connected(v_f, bidirected):
                        continue
                    return _build_certificate(roots, rset, v_prime, eset,
                                              directed, bidirected)
    return None


def _build_certificate(roots, rset, v_prime, extras, directed, bidirected):
    child_prime = _child_map(v_prime, rset, directed)
    child_extra = _child_map(extras | v_prime, v_prime, directed)
    prime_edges = tuple(sorted(child_prime.items()))
    extra_edges = tuple(sorted((v, child_extra[v]) for v in extras))
    v_f = v_prime | extras

    def induced_bidirected(vs):
        return tuple(sorted((a, b) for a, b in bidirected if a in vs and b in vs))

    f_prime = EdgeSubgraph(tuple(sorted(v_prime)), prime_edges,
                           induced_bidirected(v_prime))
    f = EdgeSubgraph(tuple(sorted(v_f)), tuple(sorted(prime_edges + extra_edges)),
                     induced_bidirected(v_f))
    return HedgeCertificate(roots=roots, forest_f=f, forest_f_prime=f_prime)


def _size_condition(cg: ClusterGraph) -> bool | None:
    """Theorem-5 side condition: every cluster in a cycle has size >= 2.
    None when some relevant size is unknown."""
    verdict: bool | None = True
    for c in cg.vertices:
        if len(cg.scc_of(c)) <= 1:
            continue
        size = cg.partition.size_of(c)
        if size is None:
            verdict = None
        elif size < 2:
            return False
    return verdict


def find_sc_hedge(cg: ClusterGraph, x, y,
                  bound: int = DEFAULT_HEDGE_BOUND) -> HedgeCertificate | None:
    """Hedge search on the SC-projection. A certificate means the macro
    effect is not identifiable, provided every cluster in a cycle has size
    at least 2; with unknown sizes the verdict is conditional."""
    if not isinstance(cg, ClusterGraph):
        raise GraphError("find_sc_hedge expects a cluster graph")
    projected = sc_projection(cg)
    cert = find_hedge(projected, x, y, bound)
    if cert is None:
        return None
    return replace(cert, projection_used=True, size_condition_met=_size_condition(cg))


def verify_certificate(g, x, y, cert: HedgeCertificate) -> list[str]:
    """Re-check every certificate invariant straight from the definitions;
    returns the list of violations (empty = valid)."""
    mg = underlying(g)
    if cert.projection_used:
        if not isinstance(g, ClusterGraph):
            return ["certificate uses the SC-projection but the graph has no clusters"]
        mg = underlying(sc_projection(g))
    xset = frozenset([x] if isinstance(x, str) else x)
    yset = frozenset([y] if isinstance(y, str) else y)
    problems: list[str] = []

    f, fp = cert.forest_f, cert.forest_f_prime
    if not f.contains(fp):
        problems.append("F' is not a subgraph of F")
    for label, sub in (("F", f), ("F'", fp)):
        for v in sub.vertices:
            if not mg.has_vertex(v):
                problems.append(f"{label} mentions unknown vertex {v!r}")
                return problems
        for t, h in sub.directed:
            if not mg.has_directed(t, h):
                problems.append(f"{label} uses missing directed edge {t}->{h}")
        for a, b in sub.bidirected:
            if not mg.has_bidirected(a, b):
                problems.append(f"{label} uses missing bidirected edge {a}<->{b}")
        if not is_c_forest(sub.as_graph(), cert.roots):
            problems.append(f"{label} is not an {set(cert.roots)}-rooted C-forest")
    if not set(f.vertices) & xset:
        problems.append("F does not intersect x")
    if set(fp.vertices) & xset:
        problems.append("F' intersects x")
    allowed_roots = set(mg.without(xset).ancestors(yset))
    if not set(cert.roots) <= allowed_roots:
        problems.append("roots are not ancestors of y in the graph without x")
    return problems
