"""Independent oracles and generators shared by the test suite.

Everything here is deliberately implemented from first principles (matrix
closures, pairwise definition scans, exact rational factor elimination)
rather than through the library's own algorithms, so that tests compare two
independent routes to the same answer.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

import numpy as np

from sigmado.graphs import (
    ALLOW_CLUSTER_LEVEL,
    ClusterGraph,
    ClusterPartition,
    MixedGraph,
)

# --- reachability / quotient oracles ---


def closure_matrix(g: MixedGraph) -> np.ndarray:
    """Reflexive-transitive closure of the directed part via boolean matrix
    powers."""
    names = g.vertices
    n = len(names)
    idx = {v: i for i, v in enumerate(names)}
    reach = np.eye(n, dtype=bool)
    adj = np.zeros((n, n), dtype=bool)
    for t, h in g.directed_edges:
        adj[idx[t], idx[h]] = True
    for _ in range(n):
        new = reach | (reach @ adj)
        if (new == reach).all():
            break
        reach = new
    return reach


def ancestors_oracle(g: MixedGraph, of) -> set[str]:
    names = g.vertices
    idx = {v: i for i, v in enumerate(names)}
    reach = closure_matrix(g)
    out = set()
    for target in of:
        out |= {names[i] for i in range(len(names)) if reach[i, idx[target]]}
    return out


def descendants_oracle(g: MixedGraph, of) -> set[str]:
    names = g.vertices
    idx = {v: i for i, v in enumerate(names)}
    reach = closure_matrix(g)
    out = set()
    for source in of:
        out |= {names[i] for i in range(len(names)) if reach[idx[source], i]}
    return out


def scc_oracle(g: MixedGraph, v: str) -> set[str]:
    return ancestors_oracle(g, [v]) & descendants_oracle(g, [v])


def quotient_edges_oracle(dmg: MixedGraph, partition: ClusterPartition):
    """Direct pairwise scan of the cluster-edge definition."""
    cluster_of = partition.cluster_of_map()
    directed = set()
    bidirected = set()
    names = partition.cluster_names
    for ci in names:
        for cj in names:
            for vi in partition.members(ci) or ():
                for vj in partition.members(cj) or ():
                    if dmg.has_directed(vi, vj):
                        directed.add((ci, cj))
                    if vi != vj and dmg.has_bidirected(vi, vj):
                        bidirected.add(tuple(sorted((ci, cj))))
    return directed, bidirected


def union_find_components(g: MixedGraph) -> set[frozenset[str]]:
    parent = {v: v for v in g.vertices}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for a, b in g.bidirected_edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    groups: dict[str, set[str]] = {}
    for v in g.vertices:
        groups.setdefault(find(v), set()).add(v)
    return {frozenset(members) for members in groups.values()}


# --- random generators (all deterministic in the passed rng) ---


def random_mixed_graph(rng: random.Random, n: int, p_dir=0.25, p_bi=0.15,
                       self_loops=False) -> MixedGraph:
    names = [f"V{i}" for i in range(n)]
    directed, bidirected = [], []
    for a, b in itertools.permutations(names, 2):
        if rng.random() < p_dir:
            directed.append((a, b))
    for a, b in itertools.combinations(names, 2):
        if rng.random() < p_bi:
            bidirected.append((a, b))
    policy = ALLOW_CLUSTER_LEVEL if self_loops else "forbid-all"
    if self_loops:
        for v in names:
            if rng.random() < 0.2:
                directed.append((v, v))
            if rng.random() < 0.15:
                bidirected.append((v, v))
    return MixedGraph(names, sorted(set(directed)), sorted(set(bidirected)), policy)


def random_dag_mixed(rng: random.Random, n: int, p_dir=0.3, p_bi=0.15) -> MixedGraph:
    names = [f"V{i}" for i in range(n)]
    order = names[:]
    rng.shuffle(order)
    pos = {v: i for i, v in enumerate(order)}
    directed = [(a, b) for a, b in itertools.permutations(names, 2)
                if pos[a] < pos[b] and rng.random() < p_dir]
    bidirected = [(a, b) for a, b in itertools.combinations(names, 2)
                  if rng.random() < p_bi]
    return MixedGraph(names, sorted(directed), sorted(bidirected))


def random_cluster_graph(rng: random.Random, k: int, p_dir=0.3, p_bi=0.2,
                         p_self=0.25, sizes_from=(1, 2, 3)) -> ClusterGraph:
    names = [f"C{i}" for i in range(k)]
    directed, bidirected = [], []
    for a, b in itertools.permutations(names, 2):
        if rng.random() < p_dir:
            directed.append((a, b))
    for a, b in itertools.combinations(names, 2):
        if rng.random() < p_bi:
            bidirected.append((a, b))
    for v in names:
        if rng.random() < p_self:
            directed.append((v, v))
        if rng.random() < p_self:
            bidirected.append((v, v))
    graph = MixedGraph(names, sorted(directed), sorted(bidirected), ALLOW_CLUSTER_LEVEL)
    sizes = {}
    for v in names:
        if graph.has_directed(v, v) or graph.has_bidirected(v, v):
            sizes[v] = rng.choice([s for s in sizes_from if s >= 2] or [2])
        else:
            sizes[v] = rng.choice(list(sizes_from))
    partition = ClusterPartition({v: None for v in names}, sizes)
    return ClusterGraph(graph, partition)


def random_compatible_subgraph(rng: random.Random, cg: ClusterGraph,
                               sizes=None) -> tuple[MixedGraph, ClusterPartition]:
    """A random edge-subgraph of the maximal compatible DMG keeping at least
    one realizing micro edge per cluster edge, so the quotient is ``cg``."""
    full, partition = cg.maximal_compatible(sizes)
    members = {c: partition.members(c) for c in partition.cluster_names}
    cluster_of = partition.cluster_of_map()
    directed = []
    by_cluster_edge: dict[tuple, list] = {}
    for t, h in full.directed_edges:
        by_cluster_edge.setdefault(("d", cluster_of[t], cluster_of[h]), []).append((t, h))
    for a, b in full.bidirected_edges:
        key = ("b",) + tuple(sorted((cluster_of[a], cluster_of[b])))
        by_cluster_edge.setdefault(key, []).append((a, b))
    kept_directed, kept_bidirected = [], []
    for key, pool in sorted(by_cluster_edge.items()):
        keep = [e for e in pool if rng.random() < 0.4]
        if not keep:
            keep = [rng.choice(pool)]
        if key[0] == "d":
            kept_directed.extend(keep)
        else:
            kept_bidirected.extend(keep)
    graph = MixedGraph(full.vertex_ids, sorted(set(kept_directed)),
                       sorted(set(kept_bidirected)))
    return graph, partition


# --- exact discrete SCMs over acyclic mixed graphs ---


class Factor:
    """A nonnegative rational table over binary variables."""

    def __init__(self, variables, table):
        self.variables = tuple(variables)
        self.table = dict(table)

    @classmethod
    def from_function(cls, variables, fn):
        variables = tuple(variables)
        table = {}
        for assignment in itertools.product((0, 1), repeat=len(variables)):
            table[assignment] = fn(dict(zip(variables, assignment)))
        return cls(variables, table)

    def multiply(self, other: "Factor") -> "Factor":
        variables = tuple(dict.fromkeys(self.variables + other.variables))
        mine = [variables.index(v) for v in self.variables]
        theirs = [variables.index(v) for v in other.variables]
        table = {}
        for assignment in itertools.product((0, 1), repeat=len(variables)):
            a = tuple(assignment[i] for i in mine)
            b = tuple(assignment[i] for i in theirs)
            table[assignment] = self.table[a] * other.table[b]
        return Factor(variables, table)

    def sum_out(self, variable) -> "Factor":
        keep = tuple(v for v in self.variables if v != variable)
        pos = self.variables.index(variable)
        table: dict = {}
        for assignment, value in self.table.items():
            reduced = assignment[:pos] + assignment[pos + 1:]
            table[reduced] = table.get(reduced, Fraction(0)) + value
        return Factor(keep, table)

    def restrict(self, evidence: dict) -> "Factor":
        keep = tuple(v for v in self.variables if v not in evidence)
        positions = [self.variables.index(v) for v in keep]
        table: dict = {}
        for assignment, value in self.table.items():
            if all(assignment[self.variables.index(v)] == bit
                   for v, bit in evidence.items() if v in self.variables):
                table[tuple(assignment[i] for i in positions)] = value
        return Factor(keep, table)


class DiscreteSCM:
    """Binary SCM over an acyclic mixed graph; each bidirected edge becomes
    one explicit binary latent with two children. All CPT entries are
    strictly positive rationals, so every conditional is well defined."""

    def __init__(self, graph: MixedGraph, rng: random.Random, denom: int = 16):
        if not graph.is_acyclic():
            raise ValueError("discrete SCMs need an acyclic graph")
        self.graph = graph
        self.observed = graph.vertices
        self.latents = [f"L{i}" for i, _ in enumerate(graph.bidirected_edges)]
        latent_children: dict[str, list[str]] = {}
        for lat, (a, b) in zip(self.latents, graph.bidirected_edges):
            latent_children[lat] = [a, b]
        parents: dict[str, list[str]] = {v: list(graph.parents(v)) for v in self.observed}
        for lat, children in latent_children.items():
            for child in children:
                parents[child].append(lat)
        self.parents = parents

        def coin():
            return Fraction(rng.randint(1, denom - 1), denom)

        self.priors = {lat: coin() for lat in self.latents}
        self.cpts: dict[str, dict[tuple, Fraction]] = {}
        for v in self.observed:
            table = {}
            for assignment in itertools.product((0, 1), repeat=len(parents[v])):
                table[assignment] = coin()
            self.cpts[v] = table

    def _factors(self, do: dict | None = None):
        do = do or {}
        factors = []
        for lat in self.latents:
            p = self.priors[lat]
            factors.append(Factor((lat,), {(0,): 1 - p, (1,): p}))
        for v in self.observed:
            if v in do:
                continue
            pa = self.parents[v]
            cpt = self.cpts[v]

            def fn(assignment, pa=pa, cpt=cpt, v=v):
                p1 = cpt[tuple(assignment[p] for p in pa)]
                return p1 if assignment[v] == 1 else 1 - p1

            factors.append(Factor(tuple(pa) + (v,), Factor.from_function(
                tuple(pa) + (v,), fn).table))
        if do:
            factors = [f.restrict(do) for f in factors]
        return factors

    def _eliminate(self, factors, variables):
        for var in variables:
            touching = [f for f in factors if var in f.variables]
            rest = [f for f in factors if var not in f.variables]
            if not touching:
                continue
            merged = touching[0]
            for f in touching[1:]:
                merged = merged.multiply(f)
            factors = rest + [merged.sum_out(var)]
        return factors

    def joint(self, do: dict | None = None) -> dict[tuple, Fraction]:
        """Distribution over the non-intervened observed variables, in
        ``self.observed`` order with intervened ones omitted."""
        do = do or {}
        factors = self._eliminate(self._factors(do), self.latents)
        product = Factor((), {(): Fraction(1)})
        for f in factors:
            product = product.multiply(f)
        order = tuple(v for v in self.observed if v not in do)
        positions = [product.variables.index(v) for v in order]
        out = {}
        for assignment, value in product.table.items():
            out[tuple(assignment[i] for i in positions)] = value
        return out


class MarginalTables:
    """Cached exact marginals of a joint table over named binary columns."""

    def __init__(self, columns, joint: dict[tuple, Fraction]):
        self.columns = tuple(columns)
        self.joint = joint
        self._cache: dict[tuple, dict] = {}

    def marginal(self, variables) -> dict[tuple, Fraction]:
        variables = tuple(sorted(variables, key=self.columns.index))
        if variables in self._cache:
            return self._cache[variables]
        positions = [self.columns.index(v) for v in variables]
        table: dict[tuple, Fraction] = {}
        for assignment, value in self.joint.items():
            key = tuple(assignment[i] for i in positions)
            table[key] = table.get(key, Fraction(0)) + value
        self._cache[variables] = table
        return table

    def prob(self, assignment: dict) -> Fraction:
        variables = tuple(sorted(assignment, key=self.columns.index))
        table = self.marginal(variables)
        return table.get(tuple(assignment[v] for v in variables), Fraction(0))


def eval_formula_exact(expr, members: dict, tables: MarginalTables, env: dict):
    """Evaluate an observational ProbExpr against an exact joint. ``env``
    maps Syms to bit tuples (one bit per micro member of the symbol's
    cluster)."""
    from sigmado.probexpr import Product, Quotient, Sum, Term

    if isinstance(expr, Term):
        if expr.do:
            raise ValueError("only observational formulas can be evaluated")

        def micro(syms):
            out = {}
            for s in syms:
                for var, bit in zip(members[s.cluster], env[s]):
                    out[var] = bit
            return out

        num = tables.prob({**micro(expr.y), **micro(expr.given)})
        if not expr.given:
            return num
        den = tables.prob(micro(expr.given))
        return num / den
    if isinstance(expr, Sum):
        total = Fraction(0)
        binders = sorted(expr.over)
        spaces = [list(itertools.product((0, 1), repeat=len(members[s.cluster])))
                  for s in binders]
        for combo in itertools.product(*spaces):
            inner = dict(env)
            inner.update(dict(zip(binders, combo)))
            total += eval_formula_exact(expr.body, members, tables, inner)
        return total
    if isinstance(expr, Product):
        out = Fraction(1)
        for f in expr.factors:
            out *= eval_formula_exact(f, members, tables, env)
        return out
    if isinstance(expr, Quotient):
        return (eval_formula_exact(expr.num, members, tables, env)
                / eval_formula_exact(expr.den, members, tables, env))
    raise TypeError(f"unknown expression node {expr!r}")


def acyclic_compatible_micro(cg: ClusterGraph) -> tuple[MixedGraph, ClusterPartition]:
    """A compatible micro DMG with cluster sizes 2 that is globally acyclic:
    order all 'a' members by cluster, then all 'b' members in reverse, and
    realize every cluster edge forward in that order (cross edges a->b of a
    later 'b'; self-loops a->b within the cluster)."""
    names = list(cg.vertices)
    members = {c: (f"{c}#1", f"{c}#2") for c in names}
    directed = []
    bidirected = []
    for t, h in cg.directed_edges:
        if t == h:
            directed.append((members[t][0], members[t][1]))
        else:
            directed.append((members[t][0], members[h][1]))
    for a, b in cg.bidirected_edges:
        if a == b:
            bidirected.append((members[a][0], members[a][1]))
        else:
            bidirected.append((members[a][0], members[b][0]))
    vertex_order = [members[c][0] for c in names] + [members[c][1] for c in reversed(names)]
    graph = MixedGraph(vertex_order, sorted(set(directed)), sorted(set(bidirected)))
    partition = ClusterPartition({c: members[c] for c in names})
    return graph, partition
