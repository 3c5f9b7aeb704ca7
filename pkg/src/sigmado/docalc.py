"""The three sigma-do-calculus rules and a bounded derivation search.

Rule conditions, for disjoint cluster sets y, x, z, w:

  rule 1 (insert/delete observation):  y ⊥ x   | w,      do(z)
  rule 2 (exchange action/observation): y ⊥ I_x | x ∪ w,  do(z)   in extend(g, x)
  rule 3 (insert/delete action):        y ⊥ I_x | w,      do(z)   in extend(g, x)

``identify`` runs a best-first search over canonicalized expressions using
the rules in both directions plus total-probability expansion; sum/product
simplification and cancellation happen inside canonicalization. A SC-hedge
certificate short-circuits to non-identifiability; an exhausted budget is
reported honestly as unknown.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass

from .graphs import INTERVENTION_PREFIX, ClusterGraph, GraphError
from .hedges import HedgeCertificate, find_sc_hedge
from .probexpr import (
    Expr,
    Product,
    Sum,
    Sym,
    Term,
    canonical_key,
    canonicalize,
    do_count,
    expr_size,
    free_syms,
    is_observational,
    render_formula,
)
from .separation import SeparationQuery, sigma_separated

DEFAULT_BUDGET = 20_000


class RuleNotApplicable(ValueError):
    """The rule's sigma-separation precondition fails."""


@dataclass(frozen=True)
class IdentifyResult:
    status: str  # "identified" | "non-identifiable" | "unknown"
    formula: Expr | None = None
    certificate: HedgeCertificate | None = None
    trace: tuple[str, ...] = ()


def _as_clusters(g, names) -> frozenset[str]:
    out = frozenset([names] if isinstance(names, str) else names)
    for c in out:
        if not g.has_vertex(c):
            raise GraphError(f"unknown cluster {c!r}")
    return out


def rule_applies(g, rule: int, y, x, z=(), w=()) -> bool:
    """Does do-calculus rule 1/2/3 apply for the given disjoint sets?"""
    if rule not in (1, 2, 3):
        raise GraphError(f"rule must be 1, 2 or 3, not {rule!r}")
    y, x, z, w = (_as_clusters(g, s) for s in (y, x, z, w))
    if not y or not x:
        raise GraphError("rule check needs nonempty y and x")
    sets = [y, x, z, w]
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            if sets[i] & sets[j]:
                raise GraphError(f"rule sets overlap on {sorted(sets[i] & sets[j])}")
    if rule == 1:
        return sigma_separated(g, SeparationQuery(y, x, w, z))
    extended = g.extend(sorted(x))
    i_x = frozenset(INTERVENTION_PREFIX + c for c in x)
    cond = (x | w) if rule == 2 else w
    return sigma_separated(extended, SeparationQuery(y, i_x, cond, z))


def _group_by_cluster(syms) -> dict[str, Sym]:
    return {s.cluster: s for s in syms}


def apply_rule(g, e: Term, rule: int, x, direction: str, symbols=None) -> Term:
    """Rewrite a term by one rule application, after checking its
    sigma-separation precondition.

    Directions: rules 1 and 3 take "delete" or "insert"; rule 2 takes
    "to_observation" or "to_do". For insertions, ``symbols`` may supply the
    value symbols to introduce (defaults to unprimed cluster symbols).
    """
    if not isinstance(e, Term):
        raise GraphError("apply_rule rewrites a single probability term")
    xset = frozenset([x] if isinstance(x, str) else x)
    y_cl = frozenset(s.cluster for s in e.y)
    given_by = _group_by_cluster(e.given)
    do_by = _group_by_cluster(e.do)

    def new_syms():
        provided = _group_by_cluster(symbols or ())
        return frozenset(provided.get(c, Sym(c)) for c in xset)

    if rule == 1 and direction == "delete":
        if not xset <= set(given_by):
            raise GraphError("rule 1 delete: x must be conditioned in the term")
        ok = rule_applies(g, 1, y_cl, xset, set(do_by), set(given_by) - xset)
        if not ok:
            raise RuleNotApplicable("rule 1 separation fails")
        return Term(e.y, frozenset(s for s in e.given if s.cluster not in xset), e.do)
    if rule == 1 and direction == "insert":
        if xset & (y_cl | set(given_by) | set(do_by)):
            raise GraphError("rule 1 insert: x already mentioned in the term")
        if not rule_applies(g, 1, y_cl, xset, set(do_by), set(given_by)):
            raise RuleNotApplicable("rule 1 separation fails")
        return Term(e.y, e.given | new_syms(), e.do)
    if rule == 2 and direction == "to_observation":
        if not xset <= set(do_by):
            raise GraphError("rule 2 to_observation: x must be in the term's do set")
        if not rule_applies(g, 2, y_cl, xset, set(do_by) - xset, set(given_by)):
            raise RuleNotApplicable("rule 2 separation fails")
        moved = frozenset(do_by[c] for c in xset)
        return Term(e.y, e.given | moved, e.do - moved)
    if rule == 2 and direction == "to_do":
        if not xset <= set(given_by):
            raise GraphError("rule 2 to_do: x must be conditioned in the term")
        if not rule_applies(g, 2, y_cl, xset, set(do_by), set(given_by) - xset):
            raise RuleNotApplicable("rule 2 separation fails")
        moved = frozenset(given_by[c] for c in xset)
        return Term(e.y, e.given - moved, e.do | moved)
    if rule == 3 and direction == "delete":
        if not xset <= set(do_by):
            raise GraphError("rule 3 delete: x must be in the term's do set")
        if not rule_applies(g, 3, y_cl, xset, set(do_by) - xset, set(given_by)):
            raise RuleNotApplicable("rule 3 separation fails")
        return Term(e.y, e.given, frozenset(s for s in e.do if s.cluster not in xset))
    if rule == 3 and direction == "insert":
        if xset & (y_cl | set(given_by) | set(do_by)):
            raise GraphError("rule 3 insert: x already mentioned in the term")
        if not rule_applies(g, 3, y_cl, xset, set(do_by), set(given_by)):
            raise RuleNotApplicable("rule 3 separation fails")
        return Term(e.y, e.given, e.do | new_syms())
    raise GraphError(f"unknown rule/direction combination ({rule!r}, {direction!r})")


def expand_total_probability(e: Term, over: str, symbol: Sym | None = None) -> Sum:
    """P(y|c) = sum_s P(y|c, s) P(s|c) with the do-context carried into both
    factors; ``over`` must not already be mentioned in the term."""
    if not isinstance(e, Term):
        raise GraphError("total probability expands a single term")
    if over in {s.cluster for s in (e.y | e.given | e.do)}:
        raise GraphError(f"cluster {over!r} is already mentioned in the term")
    sym = symbol if symbol is not None else Sym(over)
    if sym.cluster != over:
        raise GraphError("symbol clash: binder symbol must belong to the summed cluster")
    if sym in (e.y | e.given | e.do):
        raise GraphError(f"symbol clash: {sym.render()!r} already appears in the term")
    return Sum(frozenset([sym]),
               Product((Term(e.y, e.given | {sym}, e.do),
                        Term(frozenset([sym]), e.given, e.do))))


# --- the derivation search ---

class _RuleOracle:
    """rule_applies with memoized extended graphs and verdicts."""

    def __init__(self, g):
        self.g = g
        self._verdicts: dict[tuple, bool] = {}
        self._extended: dict[frozenset, object] = {}

    def applies(self, rule, y, x, z, w) -> bool:
        key = (rule, y, x, z, w)
        hit = self._verdicts.get(key)
        if hit is not None:
            return hit
        if rule == 1:
            out = sigma_separated(self.g, SeparationQuery(y, x, w, z))
        else:
            ext = self._extended.get(x)
            if ext is None:
                ext = self.g.extend(sorted(x))
                self._extended[x] = ext
            i_x = frozenset(INTERVENTION_PREFIX + c for c in x)
            cond = (x | w) if rule == 2 else w
            out = sigma_separated(ext, SeparationQuery(y, i_x, cond, z))
        self._verdicts[key] = out
        return out


def _subset_choices(pool) -> list[frozenset[str]]:
    pool = sorted(pool)
    if not pool:
        return []
    if len(pool) <= 3:
        subsets = []
        for r in range(1, len(pool) + 1):
            subsets.extend(frozenset(c) for c in itertools.combinations(pool, r))
        return subsets
    return [frozenset([c]) for c in pool] + [frozenset(pool)]


def _fmt(names) -> str:
    return ", ".join(sorted(names))


def _term_moves(oracle: _RuleOracle, e: Term, scope: frozenset[Sym]):
    """Rewrites of one term. Moves that increase the do-count (exchanges
    toward do, do-insertions, expansions) are only generated on terms that
    already carry a do(): every worked derivation in this setting threads
    through such terms, and skipping the rest keeps the frontier small."""
    y_cl = frozenset(s.cluster for s in e.y)
    given_by = _group_by_cluster(e.given)
    do_by = _group_by_cluster(e.do)
    given_cl = frozenset(given_by)
    do_cl = frozenset(do_by)
    mentioned = y_cl | given_cl | do_cl

    for xs in _subset_choices(do_cl):
        if oracle.applies(2, y_cl, xs, do_cl - xs, given_cl):
            moved = frozenset(do_by[c] for c in xs)
            yield (f"rule 2: do({_fmt(xs)}) -> {_fmt(xs)}",
                   Term(e.y, e.given | moved, e.do - moved))
        if oracle.applies(3, y_cl, xs, do_cl - xs, given_cl):
            yield (f"rule 3: drop do({_fmt(xs)})",
                   Term(e.y, e.given, e.do - frozenset(do_by[c] for c in xs)))
    for xs in _subset_choices(given_cl):
        if oracle.applies(1, y_cl, xs, do_cl, given_cl - xs):
            yield (f"rule 1: drop observation {_fmt(xs)}",
                   Term(e.y, frozenset(s for s in e.given if s.cluster not in xs), e.do))
        if do_cl and oracle.applies(2, y_cl, xs, do_cl, given_cl - xs):
            moved = frozenset(given_by[c] for c in xs)
            yield (f"rule 2: {_fmt(xs)} -> do({_fmt(xs)})",
                   Term(e.y, e.given - moved, e.do | moved))

    scope_by_cluster: dict[str, list[Sym]] = {}
    for s in sorted(scope):
        scope_by_cluster.setdefault(s.cluster, []).append(s)

    for c in oracle.g.vertices:
        if c in mentioned:
            continue
        for sym in scope_by_cluster.get(c, []):
            if oracle.applies(1, y_cl, frozenset([c]), do_cl, given_cl):
                yield (f"rule 1: insert observation {c}",
                       Term(e.y, e.given | {sym}, e.do))
            if do_cl and oracle.applies(3, y_cl, frozenset([c]), do_cl, given_cl):
                yield (f"rule 3: insert do({c})",
                       Term(e.y, e.given, e.do | {sym}))
        if do_cl:
            used = {s.prime for s in scope if s.cluster == c}
            prime = 0
            while prime in used:
                prime += 1
            yield (f"total probability over {c}",
                   expand_total_probability(e, c, Sym(c, prime)))


def _moves(oracle: _RuleOracle, e: Expr, scope: frozenset[Sym]):
    """Yield (description, replacement expression) pairs for every rewrite
    at every term position in the tree."""
    if isinstance(e, Term):
        yield from _term_moves(oracle, e, scope)
        return
    if isinstance(e, Sum):
        for desc, body in _moves(oracle, e.body, scope | e.over):
            yield desc, Sum(e.over, body)
        return
    if isinstance(e, Product):
        for i, f in enumerate(e.factors):
            for desc, nf in _moves(oracle, f, scope):
                yield desc, Product(e.factors[:i] + (nf,) + e.factors[i + 1:])
        return
    for desc, num in _moves(oracle, e.num, scope):
        yield desc, type(e)(num, e.den)
    for desc, den in _moves(oracle, e.den, scope):
        yield desc, type(e)(e.num, den)


def identify(g: ClusterGraph, y, x, budget: int = DEFAULT_BUDGET) -> IdentifyResult:
    """Try to express P(y | do(x)) without do() operators.

    Returns an identified formula, a non-identifiability certificate
    (SC-hedge), or "unknown" when the rewrite budget is exhausted — no
    complete criterion exists for this setting, so unknown stays unknown.
    """
    y_cl = _as_clusters(g, y)
    x_cl = _as_clusters(g, x)
    if not y_cl or not x_cl:
        raise GraphError("identify needs nonempty cluster sets y and x")
    if y_cl & x_cl:
        raise GraphError(f"query sets overlap on {sorted(y_cl & x_cl)}")

    try:
        certificate = find_sc_hedge(g, x_cl, y_cl)
    except GraphError:
        certificate = None  # hedge search bound exceeded; fall through to search
    if certificate is not None:
        return IdentifyResult("non-identifiable", certificate=certificate)

    root = canonicalize(Term(frozenset(Sym(c) for c in y_cl), frozenset(),
                             frozenset(Sym(c) for c in x_cl)))
    oracle = _RuleOracle(g)
    root_key = canonical_key(root)
    seen = {root_key}
    parents: dict = {root_key: (None, None)}
    # tie-break: fewer do-terms, then smaller, then lexicographic (on the
    # canonical structure key)
    heap = [(do_count(root), expr_size(root), root_key, root)]

    while heap:
        _, _, key, expr = heapq.heappop(heap)
        if is_observational(expr):
            steps = []
            k = key
            while parents[k][0] is not None:
                k, desc = parents[k]
                steps.append(desc)
            return IdentifyResult("identified", formula=expr,
                                  trace=tuple(reversed(steps)))
        scope = free_syms(expr)
        for desc, nxt in _moves(oracle, expr, scope):
            nxt = canonicalize(nxt)
            nkey = canonical_key(nxt)
            if nkey in seen:
                continue
            if len(seen) >= budget:
                return IdentifyResult("unknown")
            seen.add(nkey)
            parents[nkey] = (key, desc)
            heapq.heappush(heap, (do_count(nxt), expr_size(nxt), nkey, nxt))
    return IdentifyResult("unknown")
