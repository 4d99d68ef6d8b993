import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from LD_Algebra_Lab.braid_utils import (EMPTY, BraidWord, TermSequence, act, alpha_of, bracket, closure_sample,
                                        free_reduce, parse_braid_word, render_braid_word, shift, sigma)
from LD_Algebra_Lab.lab_errors import BraidSyntaxError, PreconditionError
from LD_Algebra_Lab.lab_results import Exhausted, Undefined
from LD_Algebra_Lab.order_utils import Equivalent, FuelMeter, decide_equiv
from LD_Algebra_Lab.term_utils import APPLY, X, apply, parse_term
from tests.strategies import a_terms, braid_words

XX = apply(X, X)


class TestWords:
    def test_parse_and_render(self):
        w = parse_braid_word("s2 S1 s3")
        assert w.letters == ((2, 1), (1, -1), (3, 1))
        assert render_braid_word(w) == "s2 S1 s3"
        assert parse_braid_word("e") == EMPTY
        assert parse_braid_word("  ") == EMPTY
        assert str(EMPTY) == "ε"

    @pytest.mark.parametrize("text", ["s", "t1", "s0", "s1x", "S-1"])
    def test_bad_tokens(self, text):
        with pytest.raises(BraidSyntaxError) as info:
            parse_braid_word(f"s1 {text}")
        assert info.value.token == text

    def test_bad_letters(self):
        with pytest.raises(ValueError):
            BraidWord(((0, 1),))
        with pytest.raises(ValueError):
            BraidWord(((1, 2),))

    def test_free_reduce(self):
        assert free_reduce(parse_braid_word("s1 s2 S2 S1 s3")) == sigma(3)
        assert free_reduce(parse_braid_word("s1 s1")) == parse_braid_word("s1 s1")

    @given(braid_words())
    def test_inverse_cancels(self, w):
        assert free_reduce(w * w.inverse()) == EMPTY
        assert free_reduce(free_reduce(w)) == free_reduce(w)

    @given(braid_words())
    def test_shift(self, w):
        assert shift(shift(w), 2) == shift(w, 3)
        assert all(i >= 2 for i, _ in shift(w))

    @given(braid_words())
    def test_render_parses_back(self, w):
        assert parse_braid_word(render_braid_word(w)) == w


class TestBracket:
    def test_empty_bracket(self):
        assert bracket(EMPTY, EMPTY) == sigma(1)

    @pytest.mark.parametrize("term,word", [("x", "e"), ("xx", "s1"), ("x(xx)", "s2 s1"), ("(xx)x", "s1 s1 S2")])
    def test_alpha(self, term, word):
        assert alpha_of(parse_term(term)) == parse_braid_word(word)

    def test_alpha_with_a_base(self):
        a = sigma(1)
        assert alpha_of(X, a) == a
        assert alpha_of(XX, a) == bracket(a, a)

    def test_alpha_rejects_other_terms(self):
        with pytest.raises(PreconditionError):
            alpha_of(parse_term("xy"))
        with pytest.raises(PreconditionError):
            alpha_of(parse_term("x o x"))

    @given(a_terms(max_leaves=6))
    def test_alpha_matches_the_bracket(self, w):
        if w.kind == APPLY:
            assert alpha_of(w) == bracket(alpha_of(w.left), alpha_of(w.right))

    def test_closure_sample(self):
        sample = closure_sample(sigma(1), 3)
        assert [shape for shape, _ in sample] == [X, XX, parse_term("x(xx)"), parse_term("(xx)x")]
        assert closure_sample(sigma(1), 0) == []


class TestAction:
    def test_positive_letters(self, tables):
        found = act(parse_braid_word("s2 s1"), TermSequence(), tables=tables)
        assert found == TermSequence((parse_term("x(xx)"),))
        assert str(found) == "⟨x(xx), x, …⟩"

    def test_inverse_letter(self, tables):
        assert act(sigma(1, -1), TermSequence((XX, X)), tables=tables) == TermSequence()

    def test_undefined(self, tables):
        found = act(sigma(1, -1), TermSequence((X, XX)), tables=tables)
        assert isinstance(found, Undefined)
        assert found.reason.startswith("letter 1 (S1)")

    def test_there_and_back(self, tables):
        start = TermSequence((XX,))
        assert act(parse_braid_word("s1 S1"), start, tables=tables) == start

    def test_runs_out_of_fuel(self, tables):
        meter = FuelMeter(1)
        meter.spend()
        found = act(sigma(1, -1), TermSequence((parse_term("x(x(xx))"), parse_term("x(xx)"))), fuel=meter,
                    tables=tables, max_level=0)
        assert isinstance(found, Exhausted)
        assert found.operation == "act"

    def test_entries_past_the_end_are_x(self):
        v = TermSequence((XX,))
        assert v.entry(1) == XX
        assert v.entry(5) == X
        assert TermSequence((XX, X, X)) == v
        with pytest.raises(IndexError):
            v.entry(0)


def same_entries(tables, a, b):
    assert isinstance(a, TermSequence) and isinstance(b, TermSequence)
    for i in range(1, max(len(a.entries), len(b.entries)) + 1):
        found = decide_equiv(a.entry(i), b.entry(i), fuel=50_000, tables=tables)
        assert not isinstance(found, Exhausted)
        if not isinstance(found, Equivalent):
            return False
    return True

def sequences(max_length=3):
    return st.lists(a_terms(max_leaves=3), max_size=max_length).map(lambda ts: TermSequence(tuple(ts)))


class TestRelations:
    @settings(max_examples=30, deadline=None)
    @given(st.integers(min_value=1, max_value=3), sequences())
    def test_braid_relation(self, tables, i, v):
        left = act(parse_braid_word(f"s{i} s{i + 1} s{i}"), v, tables=tables)
        right = act(parse_braid_word(f"s{i + 1} s{i} s{i + 1}"), v, tables=tables)
        assert same_entries(tables, left, right)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(min_value=1, max_value=4), st.integers(min_value=2, max_value=3), sequences())
    def test_distant_letters_commute(self, tables, i, gap, v):
        j = i + gap
        left = act(sigma(i) * sigma(j), v, tables=tables)
        right = act(sigma(j) * sigma(i), v, tables=tables)
        assert same_entries(tables, left, right)

    @settings(max_examples=30, deadline=None, suppress_health_check=[HealthCheck.filter_too_much])
    @given(braid_words(max_index=3, max_length=4), sequences())
    def test_word_then_its_inverse(self, tables, w, v):
        there = act(w, v, fuel=50_000, tables=tables)
        assume(isinstance(there, TermSequence))
        back = act(w * w.inverse(), v, fuel=50_000, tables=tables)
        assume(not isinstance(back, Exhausted))
        assert isinstance(back, TermSequence)
        assert same_entries(tables, back, v)

    def test_relation_on_the_empty_sequence(self, tables):
        left = act(parse_braid_word("s1 s2 s1"), TermSequence(), tables=tables)
        right = act(parse_braid_word("s2 s1 s2"), TermSequence(), tables=tables)
        assert left.trimmed() == (parse_term("(xx)(xx)"), XX)
        assert right.trimmed() == (parse_term("x(xx)"), XX)
        assert same_entries(tables, left, right)
