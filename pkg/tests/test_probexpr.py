import itertools
import random
from fractions import Fraction

import pytest

from sigmado.probexpr import (
    ONE,
    ExprError,
    Product,
    Quotient,
    Sum,
    Sym,
    Term,
    canonical_key,
    canonicalize,
    equal_canonical,
    from_ast,
    parse_formula,
    render_formula,
    term,
    to_ast,
)

CLUSTERS = ["C_W", "C_X", "C_Y", "C_Z"]

c_w, c_x, c_y, c_z = (Sym(c) for c in CLUSTERS)


class TestRendering:
    def test_simple_term(self):
        assert render_formula(term([c_y], [c_x])) == "P(c_y | c_x)"

    def test_do_only(self):
        assert render_formula(term([c_y], do=[c_x])) == "P(c_y | do(c_x))"

    def test_given_and_do(self):
        t = term([c_y], [c_w], [c_x, c_z])
        assert render_formula(t) == "P(c_y | c_w ; do(c_x, c_z))"

    def test_primes(self):
        assert render_formula(term([Sym("C_X", 1)])) == "P(c_x')"

    def test_front_door_shape(self):
        inner = Sum(frozenset([Sym("C_X", 1)]),
                    Product((term([c_y], [c_w, Sym("C_X", 1)]), term([Sym("C_X", 1)]))))
        outer = Sum(frozenset([c_w]), Product((term([c_w], [c_x]), inner)))
        text = render_formula(canonicalize(outer))
        assert text == "sum_{c_w} P(c_w | c_x) * sum_{c_x'} P(c_x') * P(c_y | c_w, c_x')"


class TestParsing:
    def test_round_trip_simple(self):
        for text in ["P(c_y | c_x)", "P(c_y | do(c_x))",
                     "P(c_y | c_w ; do(c_x, c_z))",
                     "sum_{c_w} P(c_w | c_x) * P(c_y | c_w)",
                     "P(c_x) / P(c_y)",
                     "(P(c_x) / P(c_y)) * P(c_z)"]:
            expr = parse_formula(text, CLUSTERS)
            assert render_formula(canonicalize(expr)) == render_formula(canonicalize(
                parse_formula(render_formula(canonicalize(expr)), CLUSTERS)))

    def test_cluster_names_accepted(self):
        expr = parse_formula("P(C_Y|do(C_X))", CLUSTERS)
        assert expr == term([c_y], do=[c_x])

    def test_sum_binds_rest(self):
        expr = parse_formula("P(c_x) * sum_{c_w} P(c_w) * P(c_y | c_w)", CLUSTERS)
        expr = canonicalize(expr)
        assert isinstance(expr, Product)
        sums = [f for f in expr.factors if isinstance(f, Sum)]
        assert len(sums) == 1
        assert isinstance(sums[0].body, Product)

    def test_unknown_symbol(self):
        with pytest.raises(ExprError, match="unknown symbol"):
            parse_formula("P(c_q)", CLUSTERS)

    def test_ambiguous_symbol(self):
        with pytest.raises(ExprError, match="ambiguous"):
            parse_formula("P(c_x)", ["C_X", "c_x"])

    def test_trailing_garbage(self):
        with pytest.raises(ExprError, match="trailing"):
            parse_formula("P(c_x) P(c_y)", CLUSTERS)

    def test_random_round_trip(self):
        rng = random.Random(123)
        for _ in range(300):
            expr = _random_expr(rng, scope=(c_w, c_x, c_y, c_z), depth=3)
            expr = canonicalize(expr)
            back = parse_formula(render_formula(expr), CLUSTERS)
            assert equal_canonical(expr, back)
            assert canonical_key(expr) == canonical_key(canonicalize(back))


def _random_expr(rng, scope, depth):
    kind = rng.randrange(4) if depth > 0 else 3
    if kind == 3:
        pool = list(scope)
        rng.shuffle(pool)
        take = pool[: rng.randint(1, min(3, len(pool)))]
        y = take[:1]
        rest = take[1:]
        split = rng.randint(0, len(rest))
        return term(y, rest[:split], rest[split:])
    if kind == 0:
        cluster = rng.choice(CLUSTERS)
        used = {s.prime for s in scope if s.cluster == cluster}
        prime = 0
        while prime in used:
            prime += 1
        sym = Sym(cluster, prime)
        return Sum(frozenset([sym]), _random_expr(rng, tuple(scope) + (sym,), depth - 1))
    if kind == 1:
        return Product(tuple(_random_expr(rng, scope, depth - 1)
                             for _ in range(rng.randint(1, 3))))
    return Quotient(_random_expr(rng, scope, depth - 1),
                    _random_expr(rng, scope, depth - 1))


class TestCanonicalization:
    def test_product_flattening_and_sorting(self):
        a, b = term([c_x]), term([c_y])
        nested = Product((Product((b,)), a))
        flat = canonicalize(nested)
        assert flat == canonicalize(Product((a, b)))

    def test_unit_elimination(self):
        assert canonicalize(Product((term([c_x]), ONE))) == term([c_x])
        assert canonicalize(Quotient(term([c_x]), ONE)) == term([c_x])

    def test_quotient_cancellation(self):
        a, b, c = term([c_x]), term([c_y]), term([c_z])
        q = Quotient(Product((a, b)), Product((a, c)))
        assert canonicalize(q) == canonicalize(Quotient(b, c))
        assert canonicalize(Quotient(a, a)) == ONE

    def test_nested_sum_merge_keeps_distinct_clusters(self):
        inner = Sum(frozenset([c_x]), term([c_y], [c_x, c_w]))
        outer = Sum(frozenset([c_w]), inner)
        merged = canonicalize(outer)
        assert isinstance(merged, Sum)
        assert {s.cluster for s in merged.over} == {"C_W", "C_X"}

    def test_marginalization_collapse(self):
        # sum_w P(w | x) = 1
        assert canonicalize(Sum(frozenset([c_w]), term([c_w], [c_x]))) == ONE
        # sum_w P(y, w | x) = P(y | x)
        out = canonicalize(Sum(frozenset([c_w]), term([c_y, c_w], [c_x])))
        assert out == term([c_y], [c_x])

    def test_factor_out_sum_independent(self):
        e = Sum(frozenset([c_w]), Product((term([c_x]), term([c_w], [c_x]))))
        out = canonicalize(e)
        # P(x) leaves the sum, and the remaining sum collapses to one
        assert out == term([c_x])

    def test_bound_symbol_renaming_is_canonical(self):
        s1 = Sum(frozenset([Sym("C_W", 1)]), term([Sym("C_W", 1)], [c_x]))
        s2 = Sum(frozenset([Sym("C_W", 5)]), term([Sym("C_W", 5)], [c_x]))
        assert equal_canonical(s1, s2)
        assert canonicalize(s1) == canonicalize(s2)

    def test_disjointness_enforced(self):
        with pytest.raises(ExprError):
            term([c_x], [c_x])
        with pytest.raises(ExprError):
            Term(frozenset([c_x, Sym("C_X", 1)]))


class TestAst:
    def test_round_trip(self):
        e = Sum(frozenset([c_w]),
                Product((term([c_w], [c_x]),
                         Quotient(term([c_y], [c_w]), term([c_y])))))
        assert from_ast(to_ast(e)) == e

    def test_unknown_kind(self):
        with pytest.raises(ExprError):
            from_ast({"kind": "mystery"})


class TestNumericIdentities:
    def test_total_probability_identity_on_discrete_joint(self):
        # sum_b P(a | b, c) P(b | c) == P(a | c) on an exhaustive 3-variable
        # rational joint
        rng = random.Random(5)
        names = ["A", "B", "C"]
        joint = {}
        total = Fraction(0)
        for bits in itertools.product((0, 1), repeat=3):
            joint[bits] = Fraction(rng.randint(1, 16), 16)
            total += joint[bits]
        joint = {k: v / total for k, v in joint.items()}

        def marg(assign):
            out = Fraction(0)
            for bits, p in joint.items():
                if all(bits[names.index(k)] == v for k, v in assign.items()):
                    out += p
            return out

        for a_val, c_val in itertools.product((0, 1), repeat=2):
            lhs = Fraction(0)
            for b_val in (0, 1):
                lhs += (marg({"A": a_val, "B": b_val, "C": c_val})
                        / marg({"B": b_val, "C": c_val})
                        * marg({"B": b_val, "C": c_val}) / marg({"C": c_val}))
            rhs = marg({"A": a_val, "C": c_val}) / marg({"C": c_val})
            assert lhs == rhs
