"""Symbolic probability expressions over cluster-valued variables.

An expression is a tree of Term / Sum / Product / Quotient nodes. Every
variable reference is a ``Sym``: a cluster name plus a prime count, rendered
as the lowercased cluster name with that many primes (``c_x``, ``c_x'``).
Sums bind fresh symbols; canonicalization flattens products, merges nested
sums, factors sum-independent terms out, collapses full marginalizations,
cancels identical quotient factors, sorts deterministically and renumbers
bound primes, so that two expressions are equal up to canonical form exactly
when ``canonical_key`` agrees.

Text grammar (``render_formula`` / ``parse_formula``)::

    expr  := item (("*" | "/") item)*
    item  := "P(" ids ["|" [ids] [";"] ["do(" ids ")"]] ")"
           | "sum_{" id "}" expr        -- binds the rest of the expression
           | "(" expr ")"
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union


class ExprError(ValueError):
    """Malformed expression or formula text."""


@dataclass(frozen=True, order=True)
class Sym:
    """A value symbol: cluster name plus prime count."""

    cluster: str
    prime: int = 0

    def render(self) -> str:
        return self.cluster.lower() + "'" * self.prime


@dataclass(frozen=True)
class Term:
    """P(y | given ; do(do)) — an atomic probability term."""

    y: frozenset[Sym]
    given: frozenset[Sym] = frozenset()
    do: frozenset[Sym] = frozenset()

    def __post_init__(self):
        if not self.y:
            raise ExprError("a term needs a nonempty outcome set")
        if (self.y & self.given) or (self.y & self.do) or (self.given & self.do):
            raise ExprError("term sets must be pairwise disjoint")
        clusters = [s.cluster for s in (self.y | self.given | self.do)]
        if len(set(clusters)) != len(clusters):
            raise ExprError("a term mentions some cluster twice")

    def clusters(self) -> frozenset[str]:
        return frozenset(s.cluster for s in (self.y | self.given | self.do))


@dataclass(frozen=True)
class Sum:
    over: frozenset[Sym]
    body: "Expr"

    def __post_init__(self):
        if not self.over:
            raise ExprError("a sum needs at least one bound symbol")


@dataclass(frozen=True)
class Product:
    factors: tuple["Expr", ...]


@dataclass(frozen=True)
class Quotient:
    num: "Expr"
    den: "Expr"


Expr = Union[Term, Sum, Product, Quotient]

ONE = Product(())


def term(y, given=(), do=()) -> Term:
    return Term(frozenset(y), frozenset(given), frozenset(do))


def all_syms(e: Expr) -> frozenset[Sym]:
    if isinstance(e, Term):
        return e.y | e.given | e.do
    if isinstance(e, Sum):
        return all_syms(e.body) | e.over
    if isinstance(e, Product):
        out: frozenset[Sym] = frozenset()
        for f in e.factors:
            out |= all_syms(f)
        return out
    return all_syms(e.num) | all_syms(e.den)


def free_syms(e: Expr) -> frozenset[Sym]:
    if isinstance(e, Term):
        return e.y | e.given | e.do
    if isinstance(e, Sum):
        return free_syms(e.body) - e.over
    if isinstance(e, Product):
        out: frozenset[Sym] = frozenset()
        for f in e.factors:
            out |= free_syms(f)
        return out
    return free_syms(e.num) | free_syms(e.den)


def do_count(e: Expr) -> int:
    """Total number of do() references across terms (search priority)."""
    if isinstance(e, Term):
        return len(e.do)
    if isinstance(e, Sum):
        return do_count(e.body)
    if isinstance(e, Product):
        return sum(do_count(f) for f in e.factors)
    return do_count(e.num) + do_count(e.den)


def expr_size(e: Expr) -> int:
    if isinstance(e, Term):
        return 1
    if isinstance(e, Sum):
        return 1 + expr_size(e.body)
    if isinstance(e, Product):
        return 1 + sum(expr_size(f) for f in e.factors)
    return 1 + expr_size(e.num) + expr_size(e.den)


def is_observational(e: Expr) -> bool:
    return do_count(e) == 0


# --- canonicalization ---

def _alpha_key(e: Expr, env: dict[Sym, int], depth: int):
    """Structure key invariant under bound-symbol renaming."""
    def ref(s: Sym):
        if s in env:
            return (1, env[s], s.cluster, 0)
        return (0, 0, s.cluster, s.prime)

    if isinstance(e, Term):
        return ("t", tuple(sorted(map(ref, e.y))), tuple(sorted(map(ref, e.given))),
                tuple(sorted(map(ref, e.do))))
    if isinstance(e, Sum):
        inner = dict(env)
        for s in e.over:
            inner[s] = depth
        return ("S", tuple(sorted(s.cluster for s in e.over)),
                _alpha_key(e.body, inner, depth + 1))
    if isinstance(e, Product):
        return ("P", tuple(sorted(_alpha_key(f, env, depth) for f in e.factors)))
    return ("Q", _alpha_key(e.num, env, depth), _alpha_key(e.den, env, depth))


def _normalize(e: Expr) -> Expr:
    """Bottom-up structural normalization (no renaming)."""
    if isinstance(e, Term):
        return e

    if isinstance(e, Product):
        factors: list[Expr] = []
        for f in e.factors:
            f = _normalize(f)
            if isinstance(f, Product):
                factors.extend(f.factors)
            elif f != ONE:
                factors.append(f)
        if not factors:
            return ONE
        if len(factors) == 1:
            return factors[0]
        factors.sort(key=lambda f: _alpha_key(f, {}, 0))
        return Product(tuple(factors))

    if isinstance(e, Quotient):
        num, den = _normalize(e.num), _normalize(e.den)
        if isinstance(num, Quotient):  # (a/b)/c -> a/(b*c)
            num, den = num.num, _normalize(Product((num.den, den)))
        if isinstance(den, Quotient):  # a/(b/c) -> (a*c)/b
            num, den = _normalize(Product((num, den.den))), den.num
        num_fs = list(num.factors) if isinstance(num, Product) else [num]
        den_fs = list(den.factors) if isinstance(den, Product) else [den]
        for f in list(den_fs):  # cancel identical factors
            if f in num_fs:
                num_fs.remove(f)
                den_fs.remove(f)
        num = _normalize(Product(tuple(num_fs)))
        den = _normalize(Product(tuple(den_fs)))
        if den == ONE:
            return num
        return Quotient(num, den)

    assert isinstance(e, Sum)
    body = _normalize(e.body)
    over = set(e.over)
    if isinstance(body, Sum):
        # merge nested sums unless binder clusters would collide
        outer_clusters = {s.cluster for s in over}
        inner_clusters = {s.cluster for s in body.over}
        if not outer_clusters & inner_clusters:
            over |= body.over
            body = body.body

    # factor out sum-independent factors
    if isinstance(body, Product):
        inside, outside = [], []
        for f in body.factors:
            if free_syms(f) & over:
                inside.append(f)
            else:
                outside.append(f)
        if outside:
            if inside:
                inner = _collapse_marginals(frozenset(over), _normalize(Product(tuple(inside))))
            else:
                inner = Sum(frozenset(over), ONE)  # sums over constants stay put
            return _normalize(Product(tuple(outside + [inner])))

    return _collapse_marginals(frozenset(over), body)


def _collapse_marginals(over: frozenset[Sym], body: Expr) -> Expr:
    """sum_s P(A, s | B) = P(A | B), and sum_s P(s | B) = 1. Applies to
    binders that land in a term's outcome set (term sets are disjoint, so
    such a binder occurs nowhere else in the term)."""
    remaining = set(over)
    if isinstance(body, Term):
        hits = remaining & body.y
        if hits:
            new_y = body.y - hits
            remaining -= hits
            body = Term(new_y, body.given, body.do) if new_y else ONE
    if not remaining:
        return body
    return Sum(frozenset(remaining), body)


def _renumber(e: Expr) -> Expr:
    """Assign minimal primes to bound symbols, deterministically."""
    free = free_syms(e)
    base_used: dict[str, set[int]] = {}
    for s in free:
        base_used.setdefault(s.cluster, set()).add(s.prime)

    def walk(node: Expr, mapping: dict[Sym, Sym], active: dict[str, set[int]]) -> Expr:
        if isinstance(node, Term):
            sub = lambda ss: frozenset(mapping.get(s, s) for s in ss)
            return Term(sub(node.y), sub(node.given), sub(node.do))
        if isinstance(node, Sum):
            inner_map = dict(mapping)
            inner_active = {c: set(ps) for c, ps in active.items()}
            new_over = []
            for s in sorted(node.over, key=lambda s: s.cluster):
                used = inner_active.setdefault(s.cluster, set())
                p = 0
                while p in used:
                    p += 1
                used.add(p)
                fresh = Sym(s.cluster, p)
                inner_map[s] = fresh
                new_over.append(fresh)
            return Sum(frozenset(new_over), walk(node.body, inner_map, inner_active))
        if isinstance(node, Product):
            return Product(tuple(walk(f, mapping, active) for f in node.factors))
        return Quotient(walk(node.num, mapping, active), walk(node.den, mapping, active))

    return walk(e, {}, base_used)


def canonicalize(e: Expr) -> Expr:
    return _renumber(_normalize(e))


def canonical_key(e: Expr):
    """Hashable identity of the canonical form; equal keys = equal modulo
    canonical form (including bound-symbol naming)."""
    return _alpha_key(_normalize(e), {}, 0)


def equal_canonical(a: Expr, b: Expr) -> bool:
    return canonical_key(a) == canonical_key(b)


# --- rendering ---

def render_sym(s: Sym) -> str:
    return s.render()


def _render_ids(syms) -> str:
    return ", ".join(sorted(render_sym(s) for s in syms))


def render_formula(e: Expr) -> str:
    """Deterministic text form; round-trips through ``parse_formula``."""
    if isinstance(e, Term):
        head = _render_ids(e.y)
        if e.given and e.do:
            return f"P({head} | {_render_ids(e.given)} ; do({_render_ids(e.do)}))"
        if e.given:
            return f"P({head} | {_render_ids(e.given)})"
        if e.do:
            return f"P({head} | do({_render_ids(e.do)}))"
        return f"P({head})"
    if isinstance(e, Sum):
        binders = sorted(e.over, key=lambda s: (s.cluster, s.prime))
        prefix = " ".join("sum_{%s}" % render_sym(s) for s in binders)
        return f"{prefix} {render_formula(e.body)}"
    if isinstance(e, Product):
        if not e.factors:
            return "1"
        parts = []
        for i, f in enumerate(e.factors):
            text = render_formula(f)
            if isinstance(f, Quotient) or (isinstance(f, Sum) and i < len(e.factors) - 1):
                text = f"({text})"
            parts.append(text)
        return " * ".join(parts)
    num = render_formula(e.num)
    if isinstance(e.num, (Sum, Product)):
        num = f"({num})"
    den = render_formula(e.den)
    if isinstance(e.den, (Sum, Product, Quotient)):
        den = f"({den})"
    return f"{num} / {den}"


# --- parsing ---

_TOKEN = re.compile(r"\s*(sum_\{|do\(|P\(|[()|;,*/]|1|[A-Za-z][A-Za-z0-9_]*'*|\})")


class _Tokens:
    def __init__(self, text: str):
        self.items: list[str] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m:
                raise ExprError(f"cannot tokenize formula at: {text[pos:pos + 20]!r}")
            self.items.append(m.group(1))
            pos = m.end()
        self.i = 0

    def peek(self) -> str | None:
        return self.items[self.i] if self.i < len(self.items) else None

    def pop(self, expected: str | None = None) -> str:
        tok = self.peek()
        if tok is None:
            raise ExprError("unexpected end of formula")
        if expected is not None and tok != expected:
            raise ExprError(f"expected {expected!r}, found {tok!r}")
        self.i += 1
        return tok


class SymbolResolver:
    """Maps formula identifiers to clusters: exact cluster-name match first,
    then case-insensitive match on the rendered symbol base."""

    def __init__(self, clusters):
        self.clusters = list(clusters)
        lowered: dict[str, list[str]] = {}
        for c in self.clusters:
            lowered.setdefault(c.lower(), []).append(c)
        self.lowered = lowered

    def resolve(self, token: str) -> Sym:
        base = token.rstrip("'")
        prime = len(token) - len(base)
        if base in self.clusters:
            return Sym(base, prime)
        matches = self.lowered.get(base.lower(), [])
        if len(matches) == 1:
            return Sym(matches[0], prime)
        if len(matches) > 1:
            raise ExprError(f"ambiguous symbol {token!r}: matches {matches}")
        raise ExprError(
            f"unknown symbol {token!r}; known clusters: {', '.join(self.clusters)}")


def parse_formula(text: str, clusters) -> Expr:
    """Parse the formula grammar against a cluster vocabulary."""
    tokens = _Tokens(text)
    resolver = SymbolResolver(clusters)
    expr = _parse_expr(tokens, resolver)
    if tokens.peek() is not None:
        raise ExprError(f"trailing input after formula: {tokens.peek()!r}")
    return expr


def _parse_expr(tokens: _Tokens, resolver: SymbolResolver) -> Expr:
    acc = _parse_item(tokens, resolver)
    while tokens.peek() in ("*", "/"):
        op = tokens.pop()
        rhs = _parse_item(tokens, resolver)
        if op == "*":
            lhs_factors = acc.factors if isinstance(acc, Product) else (acc,)
            acc = Product(lhs_factors + (rhs,))
        else:
            acc = Quotient(acc, rhs)
    return acc


def _parse_ids(tokens: _Tokens, resolver: SymbolResolver, stop: tuple[str, ...]):
    syms = []
    while True:
        tok = tokens.pop()
        syms.append(resolver.resolve(tok))
        if tokens.peek() == ",":
            tokens.pop()
            continue
        if tokens.peek() in stop:
            return frozenset(syms)
        raise ExprError(f"unexpected token {tokens.peek()!r} in id list")


def _parse_item(tokens: _Tokens, resolver: SymbolResolver) -> Expr:
    tok = tokens.pop()
    if tok == "(":
        inner = _parse_expr(tokens, resolver)
        tokens.pop(")")
        return inner
    if tok == "1":
        return ONE
    if tok == "sum_{":
        sym_tok = tokens.pop()
        sym = resolver.resolve(sym_tok)
        tokens.pop("}")
        body = _parse_expr(tokens, resolver)
        return Sum(frozenset([sym]), body)
    if tok == "P(":
        y = _parse_ids(tokens, resolver, stop=("|", ")"))
        given: frozenset[Sym] = frozenset()
        do: frozenset[Sym] = frozenset()
        if tokens.peek() == "|":
            tokens.pop()
            if tokens.peek() == "do(":
                tokens.pop()
                do = _parse_ids(tokens, resolver, stop=(")",))
                tokens.pop(")")
            else:
                given = _parse_ids(tokens, resolver, stop=(";", ")"))
                if tokens.peek() == ";":
                    tokens.pop()
                    tokens.pop("do(")
                    do = _parse_ids(tokens, resolver, stop=(")",))
                    tokens.pop(")")
        tokens.pop(")")
        return Term(y, given, do)
    raise ExprError(f"unexpected token {tok!r}")


# --- JSON AST ---

def _sym_to_json(s: Sym) -> dict:
    return {"cluster": s.cluster, "prime": s.prime}


def _sym_from_json(d) -> Sym:
    return Sym(d["cluster"], int(d.get("prime", 0)))


def to_ast(e: Expr) -> dict:
    if isinstance(e, Term):
        return {"kind": "term",
                "y": [_sym_to_json(s) for s in sorted(e.y)],
                "given": [_sym_to_json(s) for s in sorted(e.given)],
                "do": [_sym_to_json(s) for s in sorted(e.do)]}
    if isinstance(e, Sum):
        return {"kind": "sum",
                "over": [_sym_to_json(s) for s in sorted(e.over)],
                "body": to_ast(e.body)}
    if isinstance(e, Product):
        return {"kind": "product", "factors": [to_ast(f) for f in e.factors]}
    return {"kind": "quotient", "num": to_ast(e.num), "den": to_ast(e.den)}


def from_ast(d) -> Expr:
    kind = d.get("kind")
    if kind == "term":
        return Term(frozenset(map(_sym_from_json, d["y"])),
                    frozenset(map(_sym_from_json, d.get("given", []))),
                    frozenset(map(_sym_from_json, d.get("do", []))))
    if kind == "sum":
        return Sum(frozenset(map(_sym_from_json, d["over"])), from_ast(d["body"]))
    if kind == "product":
        return Product(tuple(from_ast(f) for f in d["factors"]))
    if kind == "quotient":
        return Quotient(from_ast(d["num"]), from_ast(d["den"]))
    raise ExprError(f"unknown AST node kind {kind!r}")
