import pytest
from hypothesis import assume, given, settings

from LD_Algebra_Lab.lab_checks import expanded_once
from LD_Algebra_Lab.lab_errors import InvalidPositionError, NotDominatedError, PreconditionError
from LD_Algebra_Lab.lab_results import Exhausted, Undefined, Verdict
from LD_Algebra_Lab.order_utils import (CONTRACT, EXPAND, ROTATE, UNROTATE, DivisionCertificate, Equivalent,
                                        FuelMeter, Inequivalent, Move, apply_move, as_meter, check_division_certificate,
                                        check_equivalence_certificate, compare, contract_once, decide_equiv,
                                        division_tree, expand_once, expansion_sites, lex_compare_xdivision,
                                        left_divide, prenormal_decompose, replay_moves, table_witness)
from LD_Algebra_Lab.term_utils import X, apply, compose, iterate, iterate_pair, leaf, parse_term, terms_up_to
from tests.strategies import a_terms

XX = apply(X, X)

# keeps dovetailed table evaluation away from the large levels
LEVELS = 8


class TestMoves:
    def test_expand_and_contract(self):
        w = parse_term("x(xx)")
        assert expand_once(w, ()) == parse_term("(xx)(xx)")
        assert contract_once(parse_term("(xx)(xx)"), ()) == w

    def test_bad_positions(self):
        with pytest.raises(InvalidPositionError):
            expand_once(XX, ())
        with pytest.raises(InvalidPositionError):
            contract_once(parse_term("(xx)(yx)"), ())

    def test_rotate_and_unrotate(self):
        state = (X, XX)
        turned = apply_move(state, Move(ROTATE, 0))
        assert turned == (parse_term("x(xx)"), X)
        assert apply_move(turned, Move(UNROTATE, 0)) == state

    def test_replay(self):
        w = parse_term("x(x(xx))")
        moves = (Move(EXPAND, 0, (1,)), Move(EXPAND, 0, ()))
        assert replay_moves(w, moves) == (parse_term("(x(xx))(x(xx))"),)
        assert replay_moves(w, moves[:1]) == (parse_term("x((xx)(xx))"),)
        with pytest.raises(InvalidPositionError):
            replay_moves(w, (Move(CONTRACT, 0, ()),))

    @given(a_terms(max_leaves=7))
    def test_expansion_preserves_the_class(self, w):
        sites = expansion_sites(w)
        assume(sites)
        assert contract_once(expand_once(w, sites[0]), sites[0]) == w


class TestFuel:
    def test_fuel_must_be_positive(self):
        with pytest.raises(PreconditionError):
            FuelMeter(0)

    def test_shared_meter(self):
        meter = FuelMeter(1000)
        assert as_meter(meter) is meter
        compare(parse_term("x(xx)"), parse_term("(xx)(xx)"), fuel=meter)
        spent = meter.nodes
        assert spent > 0
        assert meter.remaining == 1000 - spent

    def test_running_out_is_reported(self, tables):
        found = decide_equiv(parse_term("x(x(xx))"), parse_term("x((xx)x)"), fuel=1, tables=tables,
                             max_level=0)
        assert isinstance(found, Exhausted)
        assert found.operation == "decide_equiv"
        assert found.spent["nodes"] > 1

    def test_order_separates_without_tables(self, tables):
        found = decide_equiv(X, XX, tables=tables, max_level=0)
        assert isinstance(found, Inequivalent)
        assert found.level is None
        assert found.reason == "x <_L xx"
        assert check_division_certificate(found.division)


class TestEquivalence:
    def test_one_expansion(self, tables):
        u, v = parse_term("x(xx)"), parse_term("(xx)(xx)")
        found = decide_equiv(u, v, tables=tables, max_level=LEVELS)
        assert isinstance(found, Equivalent)
        assert check_equivalence_certificate(u, v, found)

    def test_identical_terms(self, tables):
        found = decide_equiv(XX, XX, tables=tables)
        assert isinstance(found, Equivalent)
        assert found.common_term == XX

    def test_separated_by_the_first_level(self, tables):
        found = decide_equiv(X, XX, tables=tables, max_level=LEVELS)
        assert isinstance(found, Inequivalent)
        assert found.level == 1
        assert found.assignment == ((0, 1),)
        assert (found.u_residue, found.v_residue) == (1, 0)

    def test_composition_lengths(self, tables):
        found = decide_equiv(parse_term("x o x"), X, tables=tables)
        assert isinstance(found, Inequivalent)
        assert found.level is None

    def test_tampered_certificate(self, tables):
        u, v = parse_term("x(xx)"), parse_term("(xx)(xx)")
        found = decide_equiv(u, v, tables=tables, max_level=LEVELS)
        forged = Equivalent(found.common, (), found.v_moves)
        assert not check_equivalence_certificate(u, v, forged)
        broken = Equivalent(found.common, (Move(CONTRACT, 0, (0,)),), found.v_moves)
        assert not check_equivalence_certificate(u, v, broken)

    def test_table_witness(self, tables):
        witness = table_witness(X, XX, tables.get(1))
        assert witness.level == 1
        assert table_witness(parse_term("x(xx)"), parse_term("(xx)(xx)"), tables.get(4)) is None

    @pytest.mark.parametrize("n", range(6))
    def test_iterate_pairs_rotate_back(self, tables, n):
        u = compose(iterate_pair(n + 1), iterate_pair(n))
        v = compose(leaf(0), leaf(1))
        found = decide_equiv(u, v, tables=tables, max_level=LEVELS)
        assert isinstance(found, Equivalent)
        assert check_equivalence_certificate(u, v, found)

    @pytest.mark.parametrize("n", range(3))
    def test_iterates_absorb_smaller_ones(self, tables, n):
        for w in (X, XX):
            for i in range(n + 1):
                found = decide_equiv(apply(iterate(w, i), iterate(w, n)), iterate(w, n + 1), tables=tables,
                                     max_level=LEVELS)
                assert isinstance(found, Equivalent)

    @settings(max_examples=40, deadline=None)
    @given(a_terms(max_leaves=6))
    def test_one_step_apart(self, tables, w):
        sites = expansion_sites(w)
        assume(sites)
        v = expand_once(w, sites[-1])
        found = decide_equiv(w, v, fuel=20_000, tables=tables, max_level=LEVELS)
        assert isinstance(found, Equivalent)
        assert check_equivalence_certificate(w, v, found)

    @pytest.mark.parametrize("u,v", [("x(x(xxx))", "x(xx)"), ("x(xx(xx))", "x(xxxx)")])
    def test_same_head_different_sizes(self, tables, u, v):
        u, v = parse_term(u), parse_term(v)
        assert isinstance(decide_equiv(u, v, tables=tables), Inequivalent)
        # with no tables at all the order still tells them apart
        found = decide_equiv(u, v, tables=tables, max_level=0)
        assert isinstance(found, Inequivalent)
        assert found.division is not None
        assert check_division_certificate(found.division)
        assert {found.division.smaller, found.division.larger} == {u, v}


class TestCompare:
    def test_x_below_xx(self, tables):
        found = compare(X, XX, tables=tables)
        assert found.relation is Verdict.LESS
        assert isinstance(found.certificate, DivisionCertificate)
        assert found.certificate.product() == XX

    def test_flipped(self, tables):
        assert compare(XX, X, tables=tables).relation is Verdict.GREATER

    def test_equal(self, tables):
        assert compare(parse_term("x(xx)"), parse_term("(xx)(xx)"), tables=tables).relation is Verdict.EQUAL

    def test_common_head_is_cancelled(self, tables):
        found = compare(parse_term("(xx)x"), parse_term("(xx)(xx)"), tables=tables)
        assert found.relation is Verdict.LESS
        # (xx)·x divides (xx)(xx) with quotient (xx)x
        assert found.certificate.args == (parse_term("(xx)x"),)
        assert isinstance(decide_equiv(found.certificate.product(), parse_term("(xx)(xx)"), tables=tables,
                                       max_level=LEVELS), Equivalent)

    @settings(max_examples=30, deadline=None)
    @given(a_terms(max_leaves=4), a_terms(max_leaves=4))
    def test_antisymmetric(self, tables, u, v):
        forward = compare(u, v, fuel=20_000, tables=tables)
        backward = compare(v, u, fuel=20_000, tables=tables)
        assume(not isinstance(forward, Exhausted) and not isinstance(backward, Exhausted))
        assert backward.relation is forward.relation.flipped()

    @settings(max_examples=30, deadline=None)
    @given(a_terms(max_leaves=4), a_terms(max_leaves=4))
    def test_certificates_multiply_out(self, tables, u, v):
        found = compare(u, v, fuel=20_000, tables=tables)
        assume(not isinstance(found, Exhausted) and found.relation is not Verdict.EQUAL)
        certificate = found.certificate
        check = decide_equiv(certificate.product(), certificate.larger, fuel=50_000, tables=tables,
                             max_level=LEVELS)
        assert not isinstance(check, Inequivalent)

    @pytest.mark.parametrize("u,v", [("x(x(xxx))", "x(xx)xx"), ("x(x(xx)x)", "xxxxx"), ("xx(xxx)", "xxxxx"),
                                     ("x(xx)(xx)", "xxxxx")])
    def test_deep_right_factors(self, tables, u, v):
        u, v = parse_term(u), parse_term(v)
        found = compare(u, v, tables=tables)
        assert not isinstance(found, Exhausted)
        assert found.relation is not Verdict.EQUAL
        assert check_division_certificate(found.certificate)
        assert compare(v, u, tables=tables).relation is found.relation.flipped()

    def test_below_a_composition(self, tables):
        found = compare(XX, parse_term("x o x"), tables=tables)
        assert found.relation is Verdict.LESS
        assert check_division_certificate(found.certificate)

    def test_rotation_makes_compositions_equal(self, tables):
        u, v = parse_term("x o x"), parse_term("xx o x")
        found = compare(u, v, tables=tables)
        assert found.relation is Verdict.EQUAL
        certificate = found.certificate
        assert check_equivalence_certificate(u, v, certificate)
        assert any(m.kind in (ROTATE, UNROTATE) for m in certificate.u_moves + certificate.v_moves)

    def test_every_small_pair_is_decided(self, tables):
        terms = terms_up_to(4)
        for u in terms:
            for v in terms:
                found = compare(u, v, tables=tables)
                assert not isinstance(found, Exhausted), (u, v)
                if found.relation is Verdict.EQUAL:
                    assert check_equivalence_certificate(u, v, found.certificate)
                else:
                    assert check_division_certificate(found.certificate)

    @pytest.mark.slow
    def test_every_pair_of_five_leaves_is_decided(self, tables):
        terms = terms_up_to(5)
        relation = {}
        for u in terms:
            for v in terms:
                found = compare(u, v, tables=tables)
                assert not isinstance(found, Exhausted), (u, v)
                relation[(u, v)] = found.relation
        for (u, v), found in relation.items():
            assert relation[(v, u)] is found.flipped()

    @settings(max_examples=40, deadline=None)
    @given(a_terms(max_leaves=6), a_terms(max_leaves=6))
    def test_spine_certificates_replay(self, tables, u, v):
        found = compare(u, v, fuel=20_000, tables=tables)
        assume(not isinstance(found, Exhausted))
        if found.relation is Verdict.EQUAL:
            assert check_equivalence_certificate(u, v, found.certificate)
        else:
            assert check_division_certificate(found.certificate)

    def test_tampered_division_certificate(self, tables):
        found = compare(X, parse_term("x(xx)"), tables=tables)
        certificate = found.certificate
        assert check_division_certificate(certificate)
        wrong = DivisionCertificate(certificate.smaller, certificate.larger, (X,), certificate.last_op,
                                    certificate.smaller_moves, certificate.larger_moves)
        assert not check_division_certificate(wrong)

    def test_lex_agrees(self, tables):
        assert lex_compare_xdivision(X, XX, tables=tables).relation is Verdict.LESS
        assert lex_compare_xdivision(XX, X, tables=tables).relation is Verdict.GREATER
        assert lex_compare_xdivision(XX, XX, tables=tables).relation is Verdict.EQUAL

    def test_lex_on_two_branches(self, tables):
        u, v = parse_term("x(xx)"), parse_term("(xx)x")
        found = lex_compare_xdivision(u, v, tables=tables)
        assert found.relation is Verdict.GREATER
        assert not found.certificate.by_fallback
        assert compare(u, v, tables=tables).relation is Verdict.GREATER

    @settings(max_examples=30, deadline=None)
    @given(a_terms(max_leaves=4), a_terms(max_leaves=4))
    def test_lex_matches_compare(self, tables, u, v):
        lex = lex_compare_xdivision(u, v, fuel=20_000, tables=tables)
        direct = compare(u, v, fuel=20_000, tables=tables)
        assume(not isinstance(lex, Exhausted) and not isinstance(direct, Exhausted))
        assert lex.relation is direct.relation


class TestCancellation:
    @settings(max_examples=40, deadline=None)
    @given(a_terms(max_leaves=4), a_terms(max_leaves=4), a_terms(max_leaves=4))
    def test_left_factor_cancels(self, tables, u, v, w):
        other = expanded_once(u)
        whole = decide_equiv(apply(u, v), apply(other, w), fuel=50_000, tables=tables, max_level=LEVELS)
        parts = decide_equiv(v, w, fuel=50_000, tables=tables, max_level=LEVELS)
        assert not isinstance(whole, Exhausted) and not isinstance(parts, Exhausted)
        assert isinstance(whole, Equivalent) == isinstance(parts, Equivalent)

    @settings(max_examples=40, deadline=None)
    @given(a_terms(max_leaves=4), a_terms(max_leaves=4), a_terms(max_leaves=4))
    def test_left_factor_keeps_the_order(self, tables, u, v, w):
        other = expanded_once(u)
        outer = compare(apply(u, v), apply(other, w), fuel=50_000, tables=tables)
        inner = compare(v, w, fuel=50_000, tables=tables)
        assert not isinstance(outer, Exhausted) and not isinstance(inner, Exhausted)
        assert outer.relation is inner.relation

    def test_expanded_factor(self, tables):
        u = parse_term("x(xx)")
        other = expanded_once(u)
        assert other == parse_term("(xx)(xx)")
        assert compare(apply(u, X), apply(other, XX), tables=tables).relation is Verdict.LESS
        assert isinstance(decide_equiv(apply(u, XX), apply(other, XX), tables=tables), Equivalent)


class TestIterates:
    @staticmethod
    def absorbing(tables, p):
        for n in range(p.size + 2):
            target = iterate(X, n)
            below = compare(p, target, tables=tables)
            assert not isinstance(below, Exhausted)
            if below.relation is not Verdict.LESS:
                continue
            if isinstance(decide_equiv(apply(p, target), iterate(X, n + 1), tables=tables, max_level=LEVELS),
                          Equivalent):
                return n
        return None

    def test_x(self, tables):
        assert self.absorbing(tables, X) == 1

    @pytest.mark.parametrize("p", terms_up_to(3), ids=str)
    def test_small_terms_are_absorbed(self, tables, p):
        assert self.absorbing(tables, p) is not None

    @pytest.mark.slow
    @pytest.mark.parametrize("p", terms_up_to(4)[4:], ids=str)
    def test_four_leaves_are_absorbed(self, tables, p):
        assert self.absorbing(tables, p) is not None


class TestDivision:
    def test_prenormal(self, tables):
        found = prenormal_decompose(X, XX, tables=tables)
        assert found.head == X
        assert found.tail == (X,)
        assert found.product() == XX

    def test_prenormal_of_itself(self, tables):
        assert prenormal_decompose(X, X, tables=tables).tail == ()

    def test_prenormal_needs_domination(self, tables):
        with pytest.raises(NotDominatedError):
            prenormal_decompose(XX, X, tables=tables)

    def test_division_tree(self, tables):
        tree = division_tree(X, XX, tables=tables)
        assert tree.node_count() == 3
        assert all(child.is_leaf for child in tree.children)
        assert tree.product() == XX
        assert tree.render() == ["xx", "  x", "  x"]

    def test_prenormal_is_unique(self, tables):
        # x(xx) and (xx)(xx) are the same element, so they share one x-prenormal sequence
        first = prenormal_decompose(X, parse_term("x(xx)"), tables=tables)
        second = prenormal_decompose(X, parse_term("(xx)(xx)"), tables=tables)
        assert first.entries == second.entries == (X, XX)
        assert first.last_op == second.last_op

    def test_division_tree_two_levels(self, tables):
        tree = division_tree(X, parse_term("x(xx)"), tables=tables)
        assert tree.render() == ["x(xx)", "  x", "  xx", "    x", "    x"]
        first, second = tree.children
        assert first.is_leaf and first.label == X
        assert second.label == XX
        assert [child.label for child in second.children] == [X, X]
        assert tree.node_count() == 5
        assert tree.product() == parse_term("x(xx)")

    def test_leaf(self, tables):
        assert division_tree(X, X, tables=tables).is_leaf

    def test_left_divide(self, tables):
        assert left_divide(parse_term("x(xx)"), X, tables=tables) == XX
        assert left_divide(XX, X, tables=tables) == X

    def test_left_divide_undefined(self, tables):
        assert isinstance(left_divide(X, XX, tables=tables), Undefined)
        assert isinstance(left_divide(X, X, tables=tables), Undefined)
