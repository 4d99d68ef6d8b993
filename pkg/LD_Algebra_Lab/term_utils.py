"""
Terms over application (·) and composition (∘).

A Term is an immutable binary tree whose leaves are generators (integer
indices, 0 being the distinguished generator x) and whose inner nodes are
either "apply" or "compose". Terms without compose nodes are A-terms; terms
that may contain compose nodes are P-terms. Equality here is always
syntactic: LD / Σ equivalence is decided in order_utils.

Text syntax:

    x, y, z, x0, x1, ...   generators (x = x0, y = x1, z = x2)
    juxtaposition, * or ·  application, left associative ("xxx" = (xx)x)
    o or ∘                 composition, lowest precedence, right associative
    ( )                    grouping

so "x o x x" is compose(x, apply(x, x)).
"""
from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Callable, Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple, Union
import logging

from .lab_config import DEFAULT_SIZE_CAP
from .lab_errors import InvalidPositionError, ResourceCapError, TermSyntaxError

logger = logging.getLogger(__name__)

LEAF = "leaf"
APPLY = "apply"
COMPOSE = "compose"

STYLE_COMPACT = "compact"
STYLE_FULL = "full-parens"

# Largest number of shapes enumerate_terms will materialise
_ENUMERATION_CAP = 250_000

_GENERATOR_NAMES = ("x", "y", "z")
_NAME_TO_GENERATOR = {"x": 0, "y": 1, "z": 2}
_APPLY_TOKENS = ("*", "·")
_COMPOSE_TOKENS = ("o", "∘")

# a node path: 0 = left child, 1 = right child
Path = Tuple[int, ...]


class Term:
    """Immutable term node. Build with leaf(), apply() and compose()."""

    __slots__ = ("kind", "var", "left", "right", "size", "_hash")

    def __init__(self, kind: str, var: int = -1, left: Optional["Term"] = None,
                 right: Optional["Term"] = None) -> None:
        if kind == LEAF:
            if var < 0:
                raise ValueError(f"generator index must be >= 0, got {var}")
            size = 1
            digest = hash((LEAF, var))
        elif kind in (APPLY, COMPOSE):
            if left is None or right is None:
                raise ValueError(f"{kind} node needs two children")
            var = -1
            size = left.size + right.size
            digest = hash((kind, left._hash, right._hash))
        else:
            raise ValueError(f"unknown node kind {kind!r}")

        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "var", var)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        object.__setattr__(self, "size", size)
        object.__setattr__(self, "_hash", digest)

    def __setattr__(self, name, value):
        raise AttributeError("Term is immutable")

    def __delattr__(self, name):
        raise AttributeError("Term is immutable")

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, Term):
            return NotImplemented

        pending = [(self, other)]
        while pending:
            a, b = pending.pop()
            if a is b:
                continue
            if a._hash != b._hash or a.kind != b.kind or a.size != b.size:
                return False
            if a.kind == LEAF:
                if a.var != b.var:
                    return False
            else:
                pending.append((a.left, b.left))
                pending.append((a.right, b.right))
        return True

    def __ne__(self, other) -> bool:
        result = self.__eq__(other)
        return result if result is NotImplemented else not result

    def __repr__(self) -> str:
        if self.size > 64:
            return f"Term(<{self.kind}, {self.size} leaves>)"
        return f"Term({render_term(self)!r})"

    def __str__(self) -> str:
        return render_term(self)

    @property
    def is_leaf(self) -> bool:
        return self.kind == LEAF

    @property
    def is_apply(self) -> bool:
        return self.kind == APPLY

    @property
    def is_compose(self) -> bool:
        return self.kind == COMPOSE


def leaf(var: int = 0) -> Term:
    return Term(LEAF, var=var)

def apply(left: Term, right: Term) -> Term:
    return Term(APPLY, left=left, right=right)

def compose(left: Term, right: Term) -> Term:
    return Term(COMPOSE, left=left, right=right)

X = leaf(0)


@dataclass(frozen=True)
class SigmaDecomposition:
    """w = w_1 ∘ w_2 ∘ ... ∘ w_c with every w_i compose-free."""
    factors: Tuple[Term, ...]

    @property
    def c(self) -> int:
        return len(self.factors)

    def as_term(self) -> Term:
        return compose_all(self.factors)

#--------------------------------------------------------------------------------------
# structural helpers

def generators(w: Term) -> FrozenSet[int]:
    seen = set()
    found = set()
    pending = [w]
    while pending:
        t = pending.pop()
        if id(t) in seen:
            continue
        seen.add(id(t))
        if t.kind == LEAF:
            found.add(t.var)
        else:
            pending.append(t.left)
            pending.append(t.right)
    return frozenset(found)

def is_a_term(w: Term) -> bool:
    """True when w has no compose node."""
    seen = set()
    pending = [w]
    while pending:
        t = pending.pop()
        if t.kind == LEAF or id(t) in seen:
            continue
        if t.kind == COMPOSE:
            return False
        seen.add(id(t))
        pending.append(t.left)
        pending.append(t.right)
    return True

def is_single_generator(w: Term) -> bool:
    return generators(w) <= {0}

def depth(w: Term) -> int:
    found: Dict[int, int] = {}
    pending = [w]
    while pending:
        t = pending[-1]
        if id(t) in found:
            pending.pop()
        elif t.kind == LEAF:
            found[id(t)] = 0
            pending.pop()
        elif id(t.left) in found and id(t.right) in found:
            found[id(t)] = 1 + max(found[id(t.left)], found[id(t.right)])
            pending.pop()
        else:
            pending.append(t.left)
            pending.append(t.right)
    return found[id(w)]

def subterm_at(w: Term, path: Sequence[int]) -> Term:
    node = w
    for step, branch in enumerate(path):
        if node.kind == LEAF:
            raise InvalidPositionError(f"path {tuple(path)} leaves the term at step {step}")
        if branch == 0:
            node = node.left
        elif branch == 1:
            node = node.right
        else:
            raise InvalidPositionError(f"path entries must be 0 or 1, got {branch}")
    return node

def replace_at(w: Term, path: Sequence[int], new: Term) -> Term:
    """Copy of w with the node at path replaced; untouched subtrees are shared."""
    if not path:
        return new
    if w.kind == LEAF:
        raise InvalidPositionError(f"path {tuple(path)} leaves the term")
    branch, rest = path[0], path[1:]
    if branch == 0:
        return Term(w.kind, left=replace_at(w.left, rest, new), right=w.right)
    if branch == 1:
        return Term(w.kind, left=w.left, right=replace_at(w.right, rest, new))
    raise InvalidPositionError(f"path entries must be 0 or 1, got {branch}")

def positions(w: Term) -> Iterator[Path]:
    """Every node path of w in preorder."""
    pending: List[Tuple[Term, Path]] = [(w, ())]
    while pending:
        node, path = pending.pop()
        yield path
        if node.kind != LEAF:
            pending.append((node.right, path + (1,)))
            pending.append((node.left, path + (0,)))

def spine_decompositions(w: Term) -> Iterator[Tuple[Term, Tuple[Term, ...]]]:
    """
    Every way of reading w as head·a_1·...·a_n along its left branch,
    starting with (w, ()) and ending at the leftmost non-apply node.
    """
    head = w
    args: Tuple[Term, ...] = ()
    yield head, args
    while head.kind == APPLY:
        args = (head.right,) + args
        head = head.left
        yield head, args

def apply_all(head: Term, args: Sequence[Term]) -> Term:
    """head·a_1·...·a_n, left associated."""
    term = head
    for arg in args:
        term = apply(term, arg)
    return term

def compose_all(factors: Sequence[Term]) -> Term:
    """f_1 ∘ (f_2 ∘ (... ∘ f_n)), right associated."""
    if not factors:
        raise ValueError("compose_all needs at least one factor")
    term = factors[-1]
    for factor in reversed(factors[:-1]):
        term = compose(factor, term)
    return term

def left_power(m: int, var: int = 0) -> Term:
    """x_(1) = x, x_(m+1) = x_(m)·x"""
    if m < 1:
        raise ValueError("left powers start at m = 1")
    base = leaf(var)
    term = base
    for _ in range(m - 1):
        term = apply(term, base)
    return term

def right_power(n: int, var: int = 0) -> Term:
    """x, x(x), x(x(x)), ... with n+1 leaves: the term j^n j"""
    base = leaf(var)
    term = base
    for _ in range(n):
        term = apply(base, term)
    return term

def catalan(n: int) -> int:
    return comb(2 * n, n) // (n + 1)

@lru_cache(maxsize=None)
def _shapes(size: int, var: int) -> Tuple[Term, ...]:
    if size == 1:
        return (leaf(var),)
    out = []
    for left_size in range(1, size):
        for left in _shapes(left_size, var):
            for right in _shapes(size - left_size, var):
                out.append(apply(left, right))
    return tuple(out)

def enumerate_terms(size: int, var: int = 0) -> Tuple[Term, ...]:
    """All A-terms in one generator with exactly `size` leaves."""
    if size < 1:
        return ()
    if catalan(size - 1) > _ENUMERATION_CAP:
        raise ResourceCapError(f"{catalan(size - 1)} shapes of size {size} exceed the enumeration cap")
    return _shapes(size, var)

def random_term(size: int, rng, var: int = 0) -> Term:
    """A random A-term with `size` leaves; rng is a numpy Generator."""
    if size < 1:
        raise ValueError("terms have at least one leaf")
    # split points are drawn in preorder, left subtree first
    built: List[Term] = []
    pending: List[Tuple[int, bool]] = [(size, False)]
    while pending:
        n, split = pending.pop()
        if n == 1:
            built.append(leaf(var))
        elif split:
            right = built.pop()
            built.append(apply(built.pop(), right))
        else:
            left_size = int(rng.integers(1, n))
            pending.extend(((n, True), (n - left_size, False), (left_size, False)))
    return built[0]

def terms_up_to(max_size: int, var: int = 0) -> List[Term]:
    out: List[Term] = []
    for size in range(1, max_size + 1):
        out.extend(enumerate_terms(size, var))
    return out

#--------------------------------------------------------------------------------------
# iterates

def _check_size(size: int, size_cap: int, what: str) -> None:
    if size > size_cap:
        raise ResourceCapError(f"{what} would have {size} leaves, cap is {size_cap}")

def iterate(w: Term, n: int, size_cap: int = DEFAULT_SIZE_CAP) -> Term:
    """w^(0) = w, w^(i+1) = w^(i) w^(i); the halves are shared, not copied."""
    if n < 0:
        raise ValueError("iterate count must be >= 0")
    term = w
    for _ in range(n):
        _check_size(2 * term.size, size_cap, "iterate")
        term = apply(term, term)
    return term

def iterate_pair(n: int, size_cap: int = DEFAULT_SIZE_CAP) -> Term:
    """I_0 = k, I_1 = j, I_{n+2} = I_{n+1} I_n with j = generator 0, k = generator 1."""
    if n < 0:
        raise ValueError("iterate_pair index must be >= 0")
    j, k = leaf(0), leaf(1)
    if n == 0:
        return k
    previous, current = k, j
    for _ in range(n - 1):
        _check_size(current.size + previous.size, size_cap, "iterate_pair")
        previous, current = current, apply(current, previous)
    return current

#--------------------------------------------------------------------------------------
# Σ-decomposition

def _chain(head: Sequence[Term], arg: Term, size_cap: int) -> Term:
    # (a∘b)c = a(bc), applied until the head is a single factor
    term = arg
    for factor in reversed(head):
        _check_size(factor.size + term.size, size_cap, "sigma_decompose factor")
        term = apply(factor, term)
    return term

def sigma_decompose(w: Term, size_cap: int = DEFAULT_SIZE_CAP) -> SigmaDecomposition:
    """
    Rewrite w with (a∘b)c = a(bc), a(b∘c) = ab∘ac and associativity of ∘
    until it is w_1 ∘ ... ∘ w_c with compose-free factors.
    """
    memo: Dict[int, Tuple[Term, ...]] = {}

    def factors(t: Term) -> Tuple[Term, ...]:
        hit = memo.get(id(t))
        if hit is not None:
            return hit
        if t.kind == LEAF:
            result: Tuple[Term, ...] = (t,)
        elif t.kind == COMPOSE:
            result = factors(t.left) + factors(t.right)
        else:
            head = factors(t.left)
            args = factors(t.right)
            if len(head) == 1 and len(args) == 1 and head[0] is t.left and args[0] is t.right:
                result = (t,)
            else:
                result = tuple(_chain(head, arg, size_cap) for arg in args)
        memo[id(t)] = result
        return result

    decomposition = SigmaDecomposition(factors(w))
    logger.debug("sigma_decompose: %d leaves -> c = %d", w.size, decomposition.c)
    return decomposition

#--------------------------------------------------------------------------------------
# parsing and printing

def generator_name(var: int) -> str:
    if var < len(_GENERATOR_NAMES):
        return _GENERATOR_NAMES[var]
    return f"x{var}"

def _tokenize(text: str) -> List[Tuple[str, object, int]]:
    tokens: List[Tuple[str, object, int]] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "()":
            tokens.append((ch, ch, i))
            i += 1
        elif ch in _APPLY_TOKENS:
            tokens.append(("*", ch, i))
            i += 1
        elif ch in _COMPOSE_TOKENS:
            tokens.append(("o", ch, i))
            i += 1
        elif ch in _NAME_TO_GENERATOR:
            j = i + 1
            while j < len(text) and text[j].isdigit():
                j += 1
            if j > i + 1:
                if ch != "x":
                    raise TermSyntaxError("only x takes a numeric index", text, i)
                var = int(text[i + 1:j])
            else:
                var = _NAME_TO_GENERATOR[ch]
            tokens.append(("name", var, i))
            i = j
        else:
            raise TermSyntaxError(f"unexpected character {ch!r}", text, i)
    tokens.append(("end", None, len(text)))
    return tokens


class _TermParser:
    def __init__(self, text: str) -> None:
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def _peek(self) -> Tuple[str, object, int]:
        return self.tokens[self.pos]

    def parse(self) -> Term:
        term = self._compose_expr()
        kind, value, at = self._peek()
        if kind != "end":
            raise TermSyntaxError(f"unexpected {value!r}", self.text, at)
        return term

    def _compose_expr(self) -> Term:
        left = self._apply_expr()
        if self._peek()[0] == "o":
            self.pos += 1
            return compose(left, self._compose_expr())
        return left

    def _apply_expr(self) -> Term:
        term = self._atom()
        while True:
            kind = self._peek()[0]
            if kind == "*":
                self.pos += 1
                term = apply(term, self._atom())
            elif kind in ("name", "("):
                term = apply(term, self._atom())
            else:
                return term

    def _atom(self) -> Term:
        kind, value, at = self._peek()
        if kind == "name":
            self.pos += 1
            return leaf(value)
        if kind == "(":
            self.pos += 1
            term = self._compose_expr()
            closing, found, where = self._peek()
            if closing != ")":
                raise TermSyntaxError("expected ')'", self.text, where)
            self.pos += 1
            return term
        if kind == "end":
            raise TermSyntaxError("unexpected end of input", self.text, at)
        raise TermSyntaxError(f"expected a generator or '(' but found {value!r}", self.text, at)


def parse_term(text: str) -> Term:
    return _TermParser(text).parse()

def _render(w: Term, pieces: Callable[[Term], List[Union[str, Term]]]) -> str:
    # pieces(node) lists the text and subterms of one node, left to right
    out: List[str] = []
    pending: List[Union[str, Term]] = [w]
    while pending:
        item = pending.pop()
        if isinstance(item, str):
            out.append(item)
        elif item.kind == LEAF:
            out.append(generator_name(item.var))
        else:
            pending.extend(reversed(pieces(item)))
    return "".join(out)

def _compact_pieces(w: Term) -> List[Union[str, Term]]:
    left: List[Union[str, Term]] = ["(", w.left, ")"] if w.left.kind == COMPOSE else [w.left]
    if w.kind == COMPOSE:
        return left + ["∘", w.right]
    if w.right.kind != LEAF:
        return left + ["(", w.right, ")"]
    return left + [w.right]

def _full_pieces(w: Term) -> List[Union[str, Term]]:
    if w.kind == COMPOSE:
        return ["(", w.left, "∘", w.right, ")"]
    return ["(", w.left, w.right, ")"]

def _render_compact(w: Term) -> str:
    return _render(w, _compact_pieces)

def _render_full(w: Term) -> str:
    return _render(w, _full_pieces)

def render_term(w: Term, style: str = STYLE_COMPACT) -> str:
    if style == STYLE_COMPACT:
        return _render_compact(w)
    if style == STYLE_FULL:
        return _render_full(w)
    raise ValueError(f"unknown render style {style!r}")
