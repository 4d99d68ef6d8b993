"""
Braid words, the shift map, the bracket α[β] = α·s(β)·σ1·s(α)^-1 and the
partial right action of braid words on sequences of terms.

Words are kept freely reduced only; equality in B_∞ is never decided here.
Statements about braids are checked through the action instead, where
order_utils supplies equivalence of the entries.

Text form: letters s<i> for σ_i and S<i> for σ_i^-1, separated by
whitespace ("s2 s1"); "e" or "ε" is the empty word.
"""
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Tuple, Union
import logging

from .lab_config import DEFAULT_EQUIV_MAX_K, DEFAULT_FUEL, DEFAULT_SIZE_CAP
from .lab_errors import BraidSyntaxError, PreconditionError
from .lab_results import Exhausted, Undefined
from .laver_utils import TableCache
from .order_utils import Fuel, as_meter, left_divide
from .term_utils import COMPOSE, LEAF, X, Term, apply, is_single_generator, render_term, terms_up_to

logger = logging.getLogger(__name__)

Letter = Tuple[int, int]

_EMPTY_TOKENS = ("e", "ε")


@dataclass(frozen=True)
class BraidWord:
    letters: Tuple[Letter, ...] = ()

    def __post_init__(self) -> None:
        for index, sign in self.letters:
            if index < 1 or sign not in (1, -1):
                raise ValueError(f"bad braid letter ({index}, {sign})")

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self) -> Iterator[Letter]:
        return iter(self.letters)

    def __mul__(self, other: "BraidWord") -> "BraidWord":
        """Plain concatenation; call free_reduce for the reduced form."""
        return BraidWord(self.letters + other.letters)

    def inverse(self) -> "BraidWord":
        return BraidWord(tuple((i, -s) for i, s in reversed(self.letters)))

    def __str__(self) -> str:
        return render_braid_word(self)


EMPTY = BraidWord()

def sigma(i: int, sign: int = 1) -> BraidWord:
    return BraidWord(((i, sign),))

def free_reduce(w: BraidWord) -> BraidWord:
    kept: List[Letter] = []
    for index, sign in w.letters:
        if kept and kept[-1] == (index, -sign):
            kept.pop()
        else:
            kept.append((index, sign))
    return BraidWord(tuple(kept))

def shift(w: BraidWord, by: int = 1) -> BraidWord:
    """σ_i -> σ_(i+by)"""
    return BraidWord(tuple((i + by, s) for i, s in w.letters))

def bracket(a: BraidWord, b: BraidWord) -> BraidWord:
    return free_reduce(a * shift(b) * sigma(1) * shift(a).inverse())

def alpha_of(b: Term, base: BraidWord = EMPTY) -> BraidWord:
    """α_x = base, α_(cd) = α_c[α_d]; base = ε gives the usual encoding of b."""
    if not is_single_generator(b):
        raise PreconditionError(f"{render_term(b)} uses generators other than x")
    memo: Dict[int, BraidWord] = {}

    def encode(t: Term) -> BraidWord:
        hit = memo.get(id(t))
        if hit is not None:
            return hit
        if t.kind == LEAF:
            word = base
        elif t.kind == COMPOSE:
            raise PreconditionError("α is defined on A-terms only; found a composition")
        else:
            word = bracket(encode(t.left), encode(t.right))
        memo[id(t)] = word
        return word

    return encode(b)

def closure_sample(a: BraidWord, depth: int) -> List[Tuple[Term, BraidWord]]:
    """
    Members of cl(a) given by every A-term shape with at most `depth`
    leaves, with the shape that produced each.
    """
    if depth < 1:
        return []
    return [(shape, alpha_of(shape, a)) for shape in terms_up_to(depth)]

def parse_braid_word(text: str) -> BraidWord:
    letters: List[Letter] = []
    for token in text.split():
        if token in _EMPTY_TOKENS:
            continue
        if len(token) < 2 or token[0] not in "sS" or not token[1:].isdigit():
            raise BraidSyntaxError("expected s<i> or S<i>", token)
        index = int(token[1:])
        if index < 1:
            raise BraidSyntaxError("generator indices start at 1", token)
        letters.append((index, 1 if token[0] == "s" else -1))
    return BraidWord(tuple(letters))

def render_braid_word(w: BraidWord) -> str:
    if not w.letters:
        return "ε"
    return " ".join(f"{'s' if sign > 0 else 'S'}{index}" for index, sign in w.letters)

#--------------------------------------------------------------------------------------
# action on sequences

@dataclass(frozen=True, eq=False)
class TermSequence:
    """⟨b_1, b_2, ...⟩ with every entry past the stored ones equal to x."""
    entries: Tuple[Term, ...] = ()

    def entry(self, i: int) -> Term:
        """1-based, like the generator indices."""
        if i < 1:
            raise IndexError("sequence positions start at 1")
        return self.entries[i - 1] if i <= len(self.entries) else X

    def trimmed(self) -> Tuple[Term, ...]:
        entries = list(self.entries)
        while entries and entries[-1] == X:
            entries.pop()
        return tuple(entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TermSequence):
            return NotImplemented
        return self.trimmed() == other.trimmed()

    def __hash__(self) -> int:
        return hash(self.trimmed())

    def __str__(self) -> str:
        shown = [render_term(t) for t in self.trimmed()] + ["x", "…"]
        return "⟨" + ", ".join(shown) + "⟩"


def act(w: BraidWord, v: TermSequence, fuel: Fuel = DEFAULT_FUEL, tables: Optional[TableCache] = None,
        max_level: int = DEFAULT_EQUIV_MAX_K,
        size_cap: int = DEFAULT_SIZE_CAP) -> Union[TermSequence, Undefined, Exhausted]:
    """
    Right action, leftmost letter first:

        σ_i       (b_i, b_i+1) -> (b_i b_i+1, b_i)
        σ_i^-1    (a, b) -> (b, c) with b c ≡ a

    The inverse step is undefined when no such c exists.
    """
    meter = as_meter(fuel)
    entries = list(v.entries)
    for step, (index, sign) in enumerate(w.letters):
        while len(entries) < index + 1:
            entries.append(X)
        a, b = entries[index - 1], entries[index]
        if sign > 0:
            entries[index - 1], entries[index] = apply(a, b), a
            continue
        quotient = left_divide(a, b, meter, tables, max_level, size_cap)
        if isinstance(quotient, Undefined):
            return Undefined(f"letter {step + 1} (S{index}): {quotient.reason}")
        if isinstance(quotient, Exhausted):
            return Exhausted("act", meter.report(), f"division at letter {step + 1}")
        entries[index - 1], entries[index] = b, quotient
    logger.debug("act %s: %d letters, %d states spent", render_braid_word(w), len(w), meter.nodes)
    return TermSequence(tuple(entries))
