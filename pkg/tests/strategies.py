from hypothesis import strategies as st

from LD_Algebra_Lab.braid_utils import BraidWord
from LD_Algebra_Lab.term_utils import X, apply, compose, leaf


def a_terms(max_leaves=6):
    """Single generator A-terms."""
    return st.recursive(st.just(X), lambda children: st.tuples(children, children).map(lambda p: apply(*p)),
                        max_leaves=max_leaves)

def p_terms(max_leaves=5, generators=1):
    """Terms that may contain compositions."""
    leaves = st.integers(min_value=0, max_value=generators - 1).map(leaf)
    return st.recursive(
        leaves,
        lambda children: st.one_of(st.tuples(children, children).map(lambda p: apply(*p)),
                                   st.tuples(children, children).map(lambda p: compose(*p))),
        max_leaves=max_leaves)

def levels(max_k=6):
    return st.integers(min_value=1, max_value=max_k)

def indices(k):
    return st.integers(min_value=0, max_value=(1 << k) - 1)

def braid_words(max_index=4, max_length=8):
    letters = st.tuples(st.integers(min_value=1, max_value=max_index), st.sampled_from((1, -1)))
    return st.lists(letters, max_size=max_length).map(lambda ls: BraidWord(tuple(ls)))
