"""Deciding sigma-separation (and d-separation on acyclic inputs).

A walk is blocked by a conditioning set W when an endpoint lies in W or some
internal triple matches one of the blocking clauses:

  * collider (head-in, head-out): middle not in W;
  * tail-in, head-out: middle in W and the previous vertex outside middle's
    strongly connected component;
  * head-in, tail-out: middle in W and the next vertex outside middle's
    component;
  * fork (tail-in, tail-out): middle in W and either neighbour outside
    middle's component.

``sigma_blocked`` evaluates those clauses directly on a concrete walk.
``sigma_separated`` decides the existence of an unblocked walk by
reachability over a finite walk-state machine: a state is (vertex, entry
mark, same-component flag), so termination is guaranteed and any reachable
target yields a witness walk. ``sigma_separated_oracle`` independently
enumerates bounded walks and checks each with ``sigma_blocked``; a shortest
active walk never repeats a machine state, so enumerating up to 3|V| steps
is exhaustive.

A query carries an intervened-and-conditioned set ``z_do``: the graph is
mutilated (all edges into z_do removed) and the conditioning set becomes
w ∪ z_do, the paper-footnote convention for do() inside separation
statements.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .graphs import GraphError, MixedGraph, Step, Walk, _tarjan, underlying

_START, _HEAD, _TAIL_OUT, _TAIL_IN = 0, 1, 2, 3
_MARKS = {_START: "start", _HEAD: "head", _TAIL_OUT: "tail", _TAIL_IN: "tail"}


@dataclass(frozen=True)
class WalkState:
    """A machine state: where the walk is and how it arrived."""

    at: str
    in_mark: str  # "start" | "head" | "tail"
    prev_in_same_scc: bool = False  # meaningful only for tail marks


@dataclass(frozen=True)
class SeparationQuery:
    """x ⊥ y given w, after intervening on (and conditioning on) z_do."""

    x: frozenset[str]
    y: frozenset[str]
    w: frozenset[str] = frozenset()
    z_do: frozenset[str] = frozenset()

    @classmethod
    def of(cls, x, y, w=(), z_do=()) -> "SeparationQuery":
        as_set = lambda s: frozenset([s] if isinstance(s, str) else s)
        return cls(as_set(x), as_set(y), as_set(w), as_set(z_do))

    def validate(self, mg: MixedGraph) -> None:
        if not self.x or not self.y:
            raise GraphError("separation query needs nonempty x and y")
        groups = [("x", self.x), ("y", self.y), ("w", self.w), ("z_do", self.z_do)]
        for name, group in groups:
            for v in group:
                if not mg.has_vertex(v):
                    raise GraphError(f"query set {name} mentions unknown vertex {v!r}")
        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                overlap = groups[i][1] & groups[j][1]
                if overlap:
                    raise GraphError(
                        f"query sets {groups[i][0]} and {groups[j][0]} overlap on "
                        f"{sorted(overlap)}")


class _SepContext:
    """Precomputed traversal structure for a (graph, z_do) pair.

    ``sigma=False`` collapses every strongly connected component to a
    singleton, which turns the machine into classical walk d-separation.
    """

    def __init__(self, mg: MixedGraph, z_do=frozenset(), sigma: bool = True):
        self.mg = mg
        self.names = mg.vertices
        self.index = {v: i for i, v in enumerate(self.names)}
        zset = {v for v in z_do}
        n = len(self.names)

        kept_directed = [(t, h) for t, h in mg.directed_edges if h not in zset]
        kept_bidirected = [(a, b) for a, b in mg.bidirected_edges
                           if a not in zset and b not in zset]

        if sigma:
            children: dict[str, set[str]] = {v: set() for v in self.names}
            for t, h in kept_directed:
                children[t].add(h)
            ids = _tarjan(list(self.names), children)
            self.scc = [ids[v] for v in self.names]
        else:
            self.scc = list(range(n))

        # traversals[v] = (u, leave_is_head, arrive_is_head, step)
        self.traversals: list[list[tuple[int, bool, bool, Step]]] = [[] for _ in range(n)]
        for t, h in kept_directed:
            ti, hi = self.index[t], self.index[h]
            fwd = Step("directed", t, h, True)
            rev = Step("directed", t, h, False)
            self.traversals[ti].append((hi, False, True, fwd))
            self.traversals[hi].append((ti, True, False, rev))
        for a, b in kept_bidirected:
            ai, bi = self.index[a], self.index[b]
            self.traversals[ai].append((bi, True, True, Step("bidirected", a, b, True)))
            if ai != bi:
                self.traversals[bi].append((ai, True, True, Step("bidirected", b, a, True)))

    def _passable(self, mark: int, conditioned: bool, leave_head: bool,
                  same_scc_next: bool) -> bool:
        if mark == _START:
            return True
        if mark == _HEAD:
            if leave_head:  # collider at the middle vertex
                return conditioned
            return not conditioned or same_scc_next
        same_scc_prev = mark == _TAIL_IN
        if leave_head:
            return not conditioned or same_scc_prev
        return not conditioned or (same_scc_prev and same_scc_next)

    def machine_reach(self, sources, cond, targets=None, want_walk: bool = False):
        """BFS over walk states. Returns (reached targets, witness walk).

        With ``targets=None`` the full set of active-walk endpoints is
        computed; otherwise the search stops at the first target hit.
        """
        n = len(self.names)
        cond_mask = [False] * n
        for v in cond:
            cond_mask[self.index[v]] = True
        target_mask = None
        if targets is not None:
            target_mask = [False] * n
            for v in targets:
                target_mask[self.index[v]] = True

        visited = bytearray(4 * n)
        parent: dict[int, tuple[int, Step]] = {}
        queue: deque[int] = deque()
        reached: set[int] = set()

        for v in sources:
            vi = self.index[v]
            if cond_mask[vi]:
                continue  # clause 1: a source inside W starts nothing
            state = vi * 4 + _START
            if not visited[state]:
                visited[state] = 1
                queue.append(state)

        while queue:
            state = queue.popleft()
            vi, mark = divmod(state, 4)
            for ui, leave_head, arrive_head, step in self.traversals[vi]:
                if not self._passable(mark, cond_mask[vi], leave_head,
                                      self.scc[ui] == self.scc[vi]):
                    continue
                if arrive_head:
                    nxt = ui * 4 + _HEAD
                else:
                    nxt = ui * 4 + (_TAIL_IN if self.scc[ui] == self.scc[vi] else _TAIL_OUT)
                if visited[nxt]:
                    continue
                visited[nxt] = 1
                parent[nxt] = (state, step)
                if not cond_mask[ui]:
                    if target_mask is None:
                        reached.add(ui)
                    elif target_mask[ui]:
                        walk = self._rebuild(nxt, parent) if want_walk else None
                        return {self.names[ui]}, walk
                queue.append(nxt)
        if target_mask is not None:
            return set(), None
        return {self.names[i] for i in reached}, None

    def _rebuild(self, state: int, parent: dict[int, tuple[int, Step]]) -> Walk:
        steps: list[Step] = []
        chain: list[int] = [state]
        while chain[-1] in parent:
            prev, step = parent[chain[-1]]
            steps.append(step)
            chain.append(prev)
        steps.reverse()
        chain.reverse()
        vertices = tuple(self.names[s // 4] for s in chain)
        return Walk(vertices, tuple(steps))

    # --- bounded walk enumeration (the independent oracle) ---

    def oracle_reach(self, source: str, cond, collect_walks: bool = False):
        """Enumerate the walks from ``source`` whose internal triples all
        pass the blocking clauses, and collect their endpoints (restricted
        to vertices outside the conditioning set, per the endpoint clause).

        A shortest active walk never revisits a (vertex, entry-mark, flag)
        state — splicing out the stretch between two visits leaves every
        remaining triple intact — so the enumeration skips extensions that
        would repeat a state along the current walk. That also bounds walk
        length by the state count without relying on the machine's
        transition encoding.
        """
        n = len(self.names)
        cond_mask = [False] * n
        for v in cond:
            cond_mask[self.index[v]] = True
        si = self.index[source]
        if cond_mask[si]:
            return set(), {}
        endpoints: set[int] = set()
        walks: dict[int, Walk] = {}

        def state_of(vi, arrive_head, prev_i):
            if arrive_head is None:
                return vi * 4
            if arrive_head:
                return vi * 4 + 1
            return vi * 4 + (3 if self.scc[vi] == self.scc[prev_i] else 2)

        # stack of (vertex, arrive_head or None at start, step taken)
        path: list[tuple[int, bool | None, Step | None]] = [(si, None, None)]
        iters = [iter(self.traversals[si])]
        on_path = {state_of(si, None, None)}
        states = [state_of(si, None, None)]
        while iters:
            vi, arrive_head, _ = path[-1]
            advanced = False
            for ui, leave_head, next_arrive_head, step in iters[-1]:
                if arrive_head is not None:
                    prev_i = path[-2][0]
                    if _triple_blocked(self.scc, cond_mask, prev_i, vi, ui,
                                       arrive_head, leave_head):
                        continue
                nxt_state = state_of(ui, next_arrive_head, vi)
                if nxt_state in on_path:
                    continue
                path.append((ui, next_arrive_head, step))
                iters.append(iter(self.traversals[ui]))
                on_path.add(nxt_state)
                states.append(nxt_state)
                if not cond_mask[ui] and ui not in endpoints:
                    endpoints.add(ui)
                    if collect_walks:
                        walks[ui] = self._path_to_walk(path)
                advanced = True
                break
            if not advanced:
                path.pop()
                iters.pop()
                on_path.discard(states.pop())
        return {self.names[i] for i in endpoints}, {
            self.names[i]: w for i, w in walks.items()}

    def _path_to_walk(self, path) -> Walk:
        vertices = tuple(self.names[vi] for vi, _, _ in path)
        steps = tuple(step for _, _, step in path[1:])
        return Walk(vertices, steps)


def _triple_blocked(scc, cond_mask, prev_i: int, mid_i: int, next_i: int,
                    arrive_head: bool, leave_head: bool) -> bool:
    """Clauses 2-5, transcribed: is (prev, mid, next) a blocking triple?"""
    in_w = cond_mask[mid_i]
    if arrive_head and leave_head:  # collider
        return not in_w
    if not arrive_head and leave_head:  # tail-in, head-out
        return in_w and scc[mid_i] != scc[prev_i]
    if arrive_head and not leave_head:  # head-in, tail-out
        return in_w and scc[mid_i] != scc[next_i]
    return in_w and not (scc[mid_i] == scc[prev_i] and scc[mid_i] == scc[next_i])


def sigma_blocked(g, walk: Walk, w) -> bool:
    """Evaluate the blocking clauses on a concrete walk of ``g``."""
    mg = underlying(g)
    walk.validate(mg)
    wset = {w} if isinstance(w, str) else set(w)
    for v in wset:
        if not mg.has_vertex(v):
            raise GraphError(f"conditioning set mentions unknown vertex {v!r}")
    if walk.vertices[0] in wset or walk.vertices[-1] in wset:
        return True
    ids = mg.scc_ids()
    scc = [ids[v] for v in mg.vertices]
    index = {v: i for i, v in enumerate(mg.vertices)}
    cond_mask = [v in wset for v in mg.vertices]
    for i in range(1, len(walk.vertices) - 1):
        arrive_head = walk.steps[i - 1].mark_at_target() == "head"
        leave_head = walk.steps[i].mark_at_source() == "head"
        if _triple_blocked(scc, cond_mask,
                           index[walk.vertices[i - 1]], index[walk.vertices[i]],
                           index[walk.vertices[i + 1]], arrive_head, leave_head):
            return True
    return False


def sigma_separated(g, query: SeparationQuery) -> bool:
    """True iff no sigma-active walk joins the query's x and y sets."""
    mg = underlying(g)
    query.validate(mg)
    ctx = _SepContext(mg, query.z_do, sigma=True)
    reached, _ = ctx.machine_reach(sorted(query.x), query.w | query.z_do,
                                   targets=query.y)
    return not reached


def find_active_walk(g, query: SeparationQuery) -> Walk | None:
    """A sigma-active witness walk, or None when the query is separated."""
    mg = underlying(g)
    query.validate(mg)
    ctx = _SepContext(mg, query.z_do, sigma=True)
    reached, walk = ctx.machine_reach(sorted(query.x), query.w | query.z_do,
                                      targets=query.y, want_walk=True)
    if not reached:
        return None
    # the reconstructed walk lives in the mutilated graph; re-check there
    assert walk is not None
    evaluation_graph = mg.intervene(query.z_do) if query.z_do else mg
    assert not sigma_blocked(evaluation_graph, walk, query.w | query.z_do)
    return walk


def d_separated(g, query: SeparationQuery) -> bool:
    """Classical walk d-separation; requires an acyclic directed part."""
    mg = underlying(g)
    if not mg.is_acyclic(ignore_self_loops=False):
        raise GraphError("d-separation needs an acyclic input graph")
    query.validate(mg)
    ctx = _SepContext(mg, query.z_do, sigma=False)
    reached, _ = ctx.machine_reach(sorted(query.x), query.w | query.z_do,
                                   targets=query.y)
    return not reached


def sigma_separated_oracle(g, query: SeparationQuery, max_vertices: int = 8) -> bool:
    """Brute-force check: enumerate all bounded walks from x and apply
    ``sigma_blocked`` to each complete candidate. Exponential; refuses
    graphs above ``max_vertices``."""
    mg = underlying(g)
    if len(mg.vertices) > max_vertices:
        raise GraphError(
            f"oracle bound exceeded: {len(mg.vertices)} vertices > {max_vertices}")
    query.validate(mg)
    ctx = _SepContext(mg, query.z_do, sigma=True)
    cond = query.w | query.z_do
    evaluation_graph = mg.intervene(query.z_do) if query.z_do else mg
    for s in sorted(query.x):
        endpoints, walks = ctx.oracle_reach(s, cond, collect_walks=True)
        hits = endpoints & query.y
        for t in sorted(hits):
            if not sigma_blocked(evaluation_graph, walks[t], cond):
                return False
    return True
