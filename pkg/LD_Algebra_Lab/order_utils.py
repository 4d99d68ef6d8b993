"""
Deciding equivalence and the left-division order <_L on terms.

A term is handled as a state: the factor tuple of its Σ-decomposition
(a single factor for A-terms). States move by

    expand      a(bc) -> (ab)(ac) inside one factor
    contract    (ab)(ac) -> a(bc) inside one factor
    rotate      f_i ∘ f_i+1 -> f_i f_i+1 ∘ f_i
    unrotate    the inverse of rotate

A-terms are compared first by walking their left spines: the first
arguments are compared recursively and the shared head is distributed
over the larger one, so both sides keep a common head until one spine
runs out. Every step of the walk is an expansion, which makes its
certificates replayable. Whatever the walk cannot settle (compositions,
mismatched generators, a spent share of the budget) goes to a forward
search (expand / rotate) from both inputs at once. Expansion alone is
confluent on A-terms, so two equivalent A-terms always meet. Table
residues from laver_utils and strict <_L relations prove inequivalence.
Prenormal search and division walk whole classes and so also contract and
unrotate.

Every search runs against a FuelMeter counting generated states. Running
out of fuel is reported as lab_results.Exhausted, never raised.
"""
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple, Union
import logging

import numpy as np

from .lab_config import DEFAULT_EQUIV_MAX_K, DEFAULT_FUEL, DEFAULT_SIZE_CAP, HARD_MAX_K
from .lab_errors import InvalidPositionError, NotDominatedError, PreconditionError
from .lab_results import Exhausted, Undefined, Verdict
from .laver_utils import LaverTable, TableCache, default_cache
from .term_utils import (APPLY, COMPOSE, LEAF, X, Path, Term, apply, apply_all, compose,
                         compose_all, generators, is_a_term, render_term, replace_at,
                         sigma_decompose, subterm_at)

logger = logging.getLogger(__name__)

EXPAND = "expand"
CONTRACT = "contract"
ROTATE = "rotate"
UNROTATE = "unrotate"

State = Tuple[Term, ...]

# states within this many layers of an input also get distribution seeds
_GUIDED_DEPTH = 2
_DISTRIBUTION_STEPS = 4096
_ROTATION_CHAIN = 8

# class members of the smaller term indexed during prenormal search and division
_HEAD_CLASS_LIMIT = 64

# levels tried when proving that a braid division has no solution
_DIVISION_TABLE_LEVELS = 8

# table levels tried before any rewriting
_EARLY_LEVELS = 4

# the spine walk may spend remaining // _SPINE_SHARE before the search takes over
_SPINE_SHARE = 2

# assignment grids larger than this are sampled
_ASSIGNMENT_GRID_CAP = 4096
_ASSIGNMENT_SAMPLES = 512


class Move(NamedTuple):
    kind: str
    factor: int
    path: Path = ()


class _FuelExhausted(Exception):
    pass


class FuelMeter(object):
    """Shared budget of generated states; nested searches draw from the same meter."""

    def __init__(self, fuel: int = DEFAULT_FUEL) -> None:
        if fuel < 1:
            raise PreconditionError("fuel must be positive")
        self.fuel = fuel
        self.nodes = 0
        self.levels = 0

    def spend(self, n: int = 1) -> None:
        self.nodes += n
        if self.nodes > self.fuel:
            raise _FuelExhausted()

    @property
    def remaining(self) -> int:
        return max(self.fuel - self.nodes, 0)

    def report(self) -> Dict[str, int]:
        return {"nodes": self.nodes, "levels": self.levels}


# public entry points take a budget or a meter to keep drawing from
Fuel = Union[int, FuelMeter]

def as_meter(fuel: Fuel) -> FuelMeter:
    return fuel if isinstance(fuel, FuelMeter) else FuelMeter(fuel)


@dataclass
class _Context:
    tables: TableCache
    max_level: int
    size_cap: int


def _context(tables: Optional[TableCache], max_level: int, size_cap: int) -> _Context:
    return _Context(tables if tables is not None else default_cache(),
                    min(max_level, HARD_MAX_K), size_cap)

#--------------------------------------------------------------------------------------
# single steps

def expand_once(w: Term, position: Sequence[int]) -> Term:
    """Replace a(bc) at position by (ab)(ac)."""
    node = subterm_at(w, position)
    if node.kind != APPLY or node.right.kind != APPLY:
        raise InvalidPositionError(f"no a(bc) at {tuple(position)} in {render_term(w)}")
    a, b, c = node.left, node.right.left, node.right.right
    return replace_at(w, tuple(position), apply(apply(a, b), apply(a, c)))

def contract_once(w: Term, position: Sequence[int]) -> Term:
    """Replace (ab)(ac) at position by a(bc)."""
    node = subterm_at(w, position)
    if (node.kind != APPLY or node.left.kind != APPLY or node.right.kind != APPLY
            or node.left.left != node.right.left):
        raise InvalidPositionError(f"no (ab)(ac) at {tuple(position)} in {render_term(w)}")
    a, b, c = node.left.left, node.left.right, node.right.right
    return replace_at(w, tuple(position), apply(a, apply(b, c)))

def _sites(w: Term, wanted: Callable[[Term], bool]) -> List[Path]:
    out = []
    pending: List[Tuple[Term, Path]] = [(w, ())]
    while pending:
        node, path = pending.pop()
        if node.kind == LEAF:
            continue
        if wanted(node):
            out.append(path)
        pending.append((node.right, path + (1,)))
        pending.append((node.left, path + (0,)))
    return out

def expansion_sites(w: Term) -> List[Path]:
    return _sites(w, lambda n: n.kind == APPLY and n.right.kind == APPLY)

def contraction_sites(w: Term) -> List[Path]:
    return _sites(w, lambda n: (n.kind == APPLY and n.left.kind == APPLY
                                and n.right.kind == APPLY and n.left.left == n.right.left))

def initial_state(w: Term) -> State:
    if is_a_term(w):
        return (w,)
    return sigma_decompose(w).factors

def apply_move(state: State, move: Move) -> State:
    i = move.factor
    if not 0 <= i < len(state):
        raise InvalidPositionError(f"no factor {i} in a state with {len(state)} factors")
    if move.kind == EXPAND:
        return state[:i] + (expand_once(state[i], move.path),) + state[i + 1:]
    if move.kind == CONTRACT:
        return state[:i] + (contract_once(state[i], move.path),) + state[i + 1:]
    if i + 1 >= len(state):
        raise InvalidPositionError(f"no factor pair at {i}")
    a, b = state[i], state[i + 1]
    if move.kind == ROTATE:
        return state[:i] + (apply(a, b), a) + state[i + 2:]
    if move.kind == UNROTATE:
        if a.kind != APPLY or a.left != b:
            raise InvalidPositionError(f"factors {i}, {i + 1} are not ab, a")
        return state[:i] + (b, a.right) + state[i + 2:]
    raise ValueError(f"unknown move {move.kind!r}")

def replay_moves(w: Term, moves: Sequence[Move]) -> State:
    """The state reached from w's decomposition by moves, checked step by step."""
    state = initial_state(w)
    for move in moves:
        state = apply_move(state, move)
    return state

def _neighbours(state: State, whole_class: bool) -> Iterator[Tuple[State, Move]]:
    for i, factor in enumerate(state):
        for path in expansion_sites(factor):
            yield state[:i] + (expand_once(factor, path),) + state[i + 1:], Move(EXPAND, i, path)
        if whole_class:
            for path in contraction_sites(factor):
                yield state[:i] + (contract_once(factor, path),) + state[i + 1:], Move(CONTRACT, i, path)
    for i in range(len(state) - 1):
        a, b = state[i], state[i + 1]
        yield state[:i] + (apply(a, b), a) + state[i + 2:], Move(ROTATE, i)
        if whole_class and a.kind == APPLY and a.left == b:
            yield state[:i] + (b, a.right) + state[i + 2:], Move(UNROTATE, i)

def _distribute(a: Term, t: Term, path: Path, steps: List[Path]) -> Term:
    # a·t -> a∗t, stopping at leaves and at copies of a
    if t.kind != APPLY or t == a:
        return apply(a, t)
    if len(steps) >= _DISTRIBUTION_STEPS:
        raise _FuelExhausted()
    steps.append(path)
    left = _distribute(a, t.left, path + (0,), steps)
    right = _distribute(a, t.right, path + (1,), steps)
    return apply(left, right)

def _guided(state: State, size_cap: int) -> Iterator[Tuple[State, Tuple[Move, ...]]]:
    """Long but cheap move sequences: full distribution of a factor, chains of rotations."""
    for i, factor in enumerate(state):
        if factor.kind == APPLY and factor.right.kind == APPLY and factor.right != factor.left:
            steps: List[Path] = []
            try:
                spread = _distribute(factor.left, factor.right, (), steps)
            except _FuelExhausted:
                continue
            if len(steps) > 1 and spread.size <= size_cap:
                yield (state[:i] + (spread,) + state[i + 1:],
                       tuple(Move(EXPAND, i, p) for p in steps))
    for i in range(len(state) - 1):
        current = state
        moves: Tuple[Move, ...] = ()
        for _ in range(_ROTATION_CHAIN):
            a, b = current[i], current[i + 1]
            if a.size + b.size > size_cap:
                break
            current = current[:i] + (apply(a, b), a) + current[i + 2:]
            moves += (Move(ROTATE, i),)
            if len(moves) > 1:
                yield current, moves

def _state_size(state: State) -> int:
    return sum(f.size for f in state)

#--------------------------------------------------------------------------------------
# results

@dataclass(frozen=True)
class Equivalent:
    """Both inputs reach `common` by the recorded forward moves."""
    common: State
    u_moves: Tuple[Move, ...] = ()
    v_moves: Tuple[Move, ...] = ()

    @property
    def common_term(self) -> Term:
        return compose_all(self.common)

    def __str__(self) -> str:
        return "equivalent"


@dataclass(frozen=True)
class Inequivalent:
    """
    Residues differ at `level` under `assignment`, the composition lengths
    differ, or one input strictly left-divides the other (`division`).
    """
    level: Optional[int]
    assignment: Tuple[Tuple[int, int], ...] = ()
    u_residue: Optional[int] = None
    v_residue: Optional[int] = None
    reason: str = "residues differ"
    division: Optional["DivisionCertificate"] = None

    def __str__(self) -> str:
        return "inequivalent"


@dataclass(frozen=True)
class DivisionCertificate:
    """larger ≡ smaller·a_1·...·a_(n-1) ∗ a_n with ∗ = last_op."""
    smaller: Term
    larger: Term
    args: Tuple[Term, ...]
    last_op: str = APPLY
    smaller_moves: Tuple[Move, ...] = ()
    larger_moves: Tuple[Move, ...] = ()

    def product(self, smaller: Optional[Term] = None) -> Term:
        head = self.smaller if smaller is None else smaller
        if self.last_op == APPLY:
            return apply_all(head, self.args)
        return compose(apply_all(head, self.args[:-1]), self.args[-1])


@dataclass(frozen=True)
class OrderVerdict:
    relation: Verdict
    certificate: object

    def __str__(self) -> str:
        return str(self.relation)


EquivResult = Union[Equivalent, Inequivalent, Exhausted]
OrderResult = Union[OrderVerdict, Exhausted]

#--------------------------------------------------------------------------------------
# residues

def _assignment_columns(size: int, gens: Sequence[int], seed: int) -> Dict[int, np.ndarray]:
    if len(gens) == 1:
        # x -> 1 first, the usual evaluation
        return {gens[0]: np.roll(np.arange(size, dtype=np.int64), -1)}
    if size ** len(gens) <= _ASSIGNMENT_GRID_CAP:
        r = np.arange(size, dtype=np.int64)
        grids = np.meshgrid(*([r] * len(gens)), indexing="ij")
        return {g: grid.ravel() for g, grid in zip(gens, grids)}
    rng = np.random.default_rng(seed)
    return {g: rng.integers(0, size, _ASSIGNMENT_SAMPLES, dtype=np.int64) for g in gens}

def evaluate_many(table: LaverTable, w: Term, columns: Dict[int, np.ndarray]) -> np.ndarray:
    """Residues of w for every row of an assignment grid at once."""
    memo: Dict[int, np.ndarray] = {}
    pending: List[Tuple[Term, bool]] = [(w, False)]
    while pending:
        node, ready = pending.pop()
        key = id(node)
        if key in memo:
            continue
        if node.kind == LEAF:
            memo[key] = columns[node.var] & (table.size - 1)
        elif ready:
            a, b = memo[id(node.left)], memo[id(node.right)]
            memo[key] = table.apply_many(a, b) if node.kind == APPLY else table.compose_many(a, b)
        else:
            pending.append((node, True))
            pending.append((node.right, False))
            pending.append((node.left, False))
    return memo[id(w)]

def table_witness(u: Term, v: Term, table: LaverTable) -> Optional[Inequivalent]:
    gens = sorted(generators(u) | generators(v))
    columns = _assignment_columns(table.size, gens, seed=table.k)
    ru = evaluate_many(table, u, columns)
    rv = evaluate_many(table, v, columns)
    differ = np.flatnonzero(ru != rv)
    if differ.size == 0:
        return None
    i = int(differ[0])
    assignment = tuple((g, int(columns[g][i])) for g in gens)
    return Inequivalent(table.k, assignment, int(ru[i]), int(rv[i]))

#--------------------------------------------------------------------------------------
# the two sided search

class _Side(object):
    """Visited states of one input, indexed for left-division lookups."""

    def __init__(self, origin: Term) -> None:
        self.origin = origin
        self.start = initial_state(origin)
        self.parents: Dict[State, Tuple[Optional[State], Tuple[Move, ...]]] = {}
        self.depth_of: Dict[State, int] = {}
        self.frontier: List[State] = []
        self.by_first: Dict[Term, List[State]] = {}
        self.by_left: Dict[Term, List[Tuple[Term, State, Tuple[Term, ...]]]] = {}
        self.prefixes: Dict[State, List[State]] = {}

    def __contains__(self, state: State) -> bool:
        return state in self.parents

    def add(self, state: State, parent: Optional[State], moves: Tuple[Move, ...]) -> bool:
        if state in self.parents:
            return False
        self.parents[state] = (parent, moves)
        self.depth_of[state] = 0 if parent is None else self.depth_of[parent] + len(moves)
        self.by_first.setdefault(state[0], []).append(state)
        node = state[0]
        above: Tuple[Term, ...] = ()
        while node.kind == APPLY:
            self.by_left.setdefault(node.left, []).append((node, state, above))
            above = (node.right,) + above
            node = node.left
        for cut in range(1, len(state)):
            self.prefixes.setdefault(state[:cut], []).append(state)
        return True

    def moves_to(self, state: State) -> Tuple[Move, ...]:
        chunks = []
        current: Optional[State] = state
        while current is not None:
            parent, moves = self.parents[current]
            chunks.append(moves)
            current = parent
        return tuple(m for chunk in reversed(chunks) for m in chunk)


def _chain_arg(rest: State, node: Term) -> Optional[Term]:
    # (s_1 ∘ ... ∘ s_c)·a = s_1(s_2(...(s_c a))): follow the right spine through s_2..s_c
    for factor in rest:
        if node.kind != APPLY or node.left != factor:
            return None
        node = node.right
    return node

def _finish(args: Tuple[Term, ...], larger: State) -> Tuple[Tuple[Term, ...], str]:
    if len(larger) == 1:
        return args, APPLY
    return args + (compose_all(larger[1:]),), COMPOSE

def _divisions(larger: State, side: _Side) -> Iterator[Tuple[State, Tuple[Term, ...], str]]:
    """States of side that left-divide `larger`, with the quotient arguments."""
    node = larger[0]
    above: Tuple[Term, ...] = ()
    while node.kind == APPLY:
        for smaller in side.by_first.get(node.left, ()):
            a1 = _chain_arg(smaller[1:], node.right)
            if a1 is not None:
                yield (smaller,) + _finish((a1,) + above, larger)
        above = (node.right,) + above
        node = node.left
    for cut in range(1, len(larger)):
        if larger[:cut] in side:
            yield larger[:cut], (compose_all(larger[cut:]),), COMPOSE

def _divided_by(smaller: State, side: _Side) -> Iterator[Tuple[State, Tuple[Term, ...], str]]:
    """States of side that `smaller` left-divides."""
    for node, larger, above in side.by_left.get(smaller[0], ()):
        a1 = _chain_arg(smaller[1:], node.right)
        if a1 is not None:
            yield (larger,) + _finish((a1,) + above, larger)
    for larger in side.prefixes.get(smaller, ()):
        yield larger, (compose_all(larger[len(smaller):]),), COMPOSE


class _Hit(NamedTuple):
    kind: str                # "equal" or "divides"
    smaller_side: int
    smaller: State
    larger: State
    args: Tuple[Term, ...] = ()
    last_op: str = APPLY


class _Search(object):
    """Breadth first forward search from u and v, growing the smaller frontier first."""

    def __init__(self, u: Term, v: Term, meter: FuelMeter, ctx: _Context, want_order: bool) -> None:
        self.sides = (_Side(u), _Side(v))
        self.meter = meter
        self.ctx = ctx
        self.want_order = want_order

    def _match(self, index: int, state: State) -> Optional[_Hit]:
        other = self.sides[1 - index]
        if state in other:
            return _Hit("equal", index, state, state)
        if not self.want_order:
            return None
        for smaller, args, last_op in _divisions(state, other):
            return _Hit("divides", 1 - index, smaller, state, args, last_op)
        for larger, args, last_op in _divided_by(state, other):
            return _Hit("divides", index, state, larger, args, last_op)
        return None

    def _admit(self, index: int, state: State, parent: Optional[State],
               moves: Tuple[Move, ...], frontier: List[State]) -> Optional[_Hit]:
        side = self.sides[index]
        if not side.add(state, parent, moves):
            return None
        frontier.append(state)
        hit = self._match(index, state)
        if hit is not None:
            return hit
        if side.depth_of[state] <= _GUIDED_DEPTH and len(moves) <= 1:
            for seed, seed_moves in _guided(state, self.ctx.size_cap):
                self.meter.spend()
                if side.add(seed, state, seed_moves):
                    frontier.append(seed)
                    hit = self._match(index, seed)
                    if hit is not None:
                        return hit
        return None

    def seed(self) -> Optional[_Hit]:
        for index, side in enumerate(self.sides):
            hit = self._admit(index, side.start, None, (), side.frontier)
            if hit is not None:
                return hit
        return None

    def grow(self) -> Optional[_Hit]:
        """One layer on the side with the smaller frontier; None when nothing met."""
        open_sides = [i for i in (0, 1) if self.sides[i].frontier]
        if not open_sides:
            raise _SearchClosed()
        index = min(open_sides, key=lambda i: len(self.sides[i].frontier))
        side = self.sides[index]
        layer, side.frontier = side.frontier, []
        for state in layer:
            for new, move in _neighbours(state, whole_class=False):
                if _state_size(new) > self.ctx.size_cap:
                    continue
                self.meter.spend()
                hit = self._admit(index, new, state, (move,), side.frontier)
                if hit is not None:
                    return hit
        logger.debug("search layer on side %d: %d states, %d spent",
                     index, len(side.frontier), self.meter.nodes)
        return None

    def verdict(self, hit: _Hit) -> OrderVerdict:
        u_side, v_side = self.sides
        if hit.kind == "equal":
            return OrderVerdict(Verdict.EQUAL, Equivalent(hit.larger, u_side.moves_to(hit.larger),
                                                          v_side.moves_to(hit.larger)))
        small, large = self.sides[hit.smaller_side], self.sides[1 - hit.smaller_side]
        certificate = DivisionCertificate(small.origin, large.origin, hit.args, hit.last_op,
                                          small.moves_to(hit.smaller), large.moves_to(hit.larger))
        relation = Verdict.LESS if hit.smaller_side == 0 else Verdict.GREATER
        return OrderVerdict(relation, certificate)


class _SearchClosed(Exception):
    pass

#--------------------------------------------------------------------------------------
# comparison along left spines

class _SpineGaveUp(Exception):
    pass


@dataclass(frozen=True)
class _Walk:
    """a and b expanded along a_paths / b_paths to a_final / b_final.

    EQUAL: the finals coincide. LESS: b_final = a_final·args. GREATER: a_final = b_final·args.
    """
    relation: Verdict
    a_final: Term
    b_final: Term
    a_paths: Tuple[Path, ...] = ()
    b_paths: Tuple[Path, ...] = ()
    args: Tuple[Term, ...] = ()


def _spine(w: Term) -> Tuple[Term, List[Term]]:
    """w = head·a_1·...·a_m with head a leaf."""
    args = []
    while w.kind == APPLY:
        args.append(w.right)
        w = w.left
    args.reverse()
    return w, args


class _SpineWalker(object):
    """
    Compares h·a_1·...·a_m with h·b_1·...·b_n by comparing a_1 with b_1.

    Equal first arguments join the head. When b_1 ≡ a_1·c_1·...·c_j the
    head is distributed over b_1,

        h·(a_1 c_1 ... c_j) -> (h a_1)(h c_1)...(h c_j),

    and both sides share the head h·a_1 again. The walk ends when a spine
    runs out.
    """

    def __init__(self, meter: FuelMeter, limit: int, size_cap: int) -> None:
        self.meter = meter
        self.limit = limit
        self.size_cap = size_cap

    def _spend(self, n: int = 1) -> None:
        if self.meter.nodes + n > self.limit:
            raise _SpineGaveUp()
        self.meter.spend(n)

    def _spread(self, at: Path, count: int) -> List[Path]:
        # expansions turning the node at `at` from h·(a c_1 ... c_j) into (h a)(h c_1)...(h c_j)
        self._spend(count)
        return [at + (0,) * i for i in range(count)]

    def walk(self, a: Term, b: Term) -> _Walk:
        self._spend()
        if a == b:
            return _Walk(Verdict.EQUAL, a, b)
        head, left = _spine(a)
        other, right = _spine(b)
        if head != other:
            raise _SpineGaveUp()

        a_paths: List[Path] = []
        b_paths: List[Path] = []
        while left and right:
            inner = self.walk(left[0], right[0])
            at_a = (0,) * (len(left) - 1)
            at_b = (0,) * (len(right) - 1)
            a_paths.extend(at_a + (1,) + p for p in inner.a_paths)
            b_paths.extend(at_b + (1,) + p for p in inner.b_paths)
            if inner.relation is Verdict.EQUAL:
                head = apply(head, inner.a_final)
                left, right = left[1:], right[1:]
            elif inner.relation is Verdict.LESS:
                b_paths.extend(self._spread(at_b, len(inner.args)))
                right = [apply(head, c) for c in inner.args] + right[1:]
                head = apply(head, inner.a_final)
                left = left[1:]
            else:
                a_paths.extend(self._spread(at_a, len(inner.args)))
                left = [apply(head, c) for c in inner.args] + left[1:]
                head = apply(head, inner.b_final)
                right = right[1:]
            if head.size + sum(t.size for t in left) + sum(t.size for t in right) > self.size_cap:
                raise _SpineGaveUp()

        a_final, b_final = apply_all(head, left), apply_all(head, right)
        if not left and not right:
            relation, args = Verdict.EQUAL, ()
        elif not left:
            relation, args = Verdict.LESS, tuple(right)
        else:
            relation, args = Verdict.GREATER, tuple(left)
        return _Walk(relation, a_final, b_final, tuple(a_paths), tuple(b_paths), args)


def _spine_walk(u: Term, v: Term, meter: FuelMeter, ctx: _Context) -> Optional[_Walk]:
    """None when the walk does not apply or gives up within its share of the budget."""
    if not (is_a_term(u) and is_a_term(v)):
        return None
    limit = meter.nodes + max(meter.remaining // _SPINE_SHARE, 1)
    try:
        return _SpineWalker(meter, limit, ctx.size_cap).walk(u, v)
    except (_SpineGaveUp, RecursionError):
        logger.debug("spine walk gave up after %d states", meter.nodes)
        return None

def _walk_verdict(u: Term, v: Term, walk: _Walk) -> OrderVerdict:
    u_moves = tuple(Move(EXPAND, 0, p) for p in walk.a_paths)
    v_moves = tuple(Move(EXPAND, 0, p) for p in walk.b_paths)
    if walk.relation is Verdict.EQUAL:
        return OrderVerdict(Verdict.EQUAL, Equivalent((walk.a_final,), u_moves, v_moves))
    if walk.relation is Verdict.LESS:
        return OrderVerdict(Verdict.LESS, DivisionCertificate(u, v, walk.args, APPLY, u_moves, v_moves))
    return OrderVerdict(Verdict.GREATER, DivisionCertificate(v, u, walk.args, APPLY, v_moves, u_moves))

def check_division_certificate(certificate: DivisionCertificate) -> bool:
    """The recorded moves take smaller to s and larger to the product of s with the arguments."""
    try:
        reached = replay_moves(certificate.smaller, certificate.smaller_moves)
        target = replay_moves(certificate.larger, certificate.larger_moves)
    except InvalidPositionError:
        return False
    return initial_state(certificate.product(compose_all(reached))) == target

#--------------------------------------------------------------------------------------
# equivalence

def _common_head(u: Term, v: Term) -> Tuple[List[Term], Term, Term]:
    # left cancellation: a·b vs a·c reduces to b vs c
    heads = []
    while (u.kind == APPLY and v.kind == APPLY and u.left == v.left
           and is_a_term(u) and is_a_term(v)):
        heads.append(u.left)
        u, v = u.right, v.right
    return heads, u, v

def _lift_equivalent(heads: List[Term], found: Equivalent) -> Equivalent:
    common = found.common[0]
    u_moves, v_moves = found.u_moves, found.v_moves
    for head in reversed(heads):
        common = apply(head, common)
        u_moves = tuple(Move(m.kind, 0, (1,) + m.path) for m in u_moves)
        v_moves = tuple(Move(m.kind, 0, (1,) + m.path) for m in v_moves)
    return Equivalent((common,), u_moves, v_moves)

def _lift_division(heads: List[Term], smaller: Term, larger: Term,
                   found: DivisionCertificate) -> DivisionCertificate:
    args = found.args
    for head in reversed(heads):
        args = tuple(apply(head, a) for a in args)
    return DivisionCertificate(smaller, larger, args, found.last_op)

def _decide_equiv(u: Term, v: Term, meter: FuelMeter, ctx: _Context) -> EquivResult:
    if u == v:
        return Equivalent(initial_state(u))
    if len(initial_state(u)) != len(initial_state(v)):
        return Inequivalent(None, reason="composition lengths differ")

    level = 0
    while level < min(_EARLY_LEVELS, ctx.max_level):
        level += 1
        meter.levels = level
        witness = table_witness(u, v, ctx.tables.get(level))
        if witness is not None:
            return witness

    walk = _spine_walk(u, v, meter, ctx)
    if walk is not None:
        found = _walk_verdict(u, v, walk)
        if found.relation is Verdict.EQUAL:
            return found.certificate
        certificate = found.certificate
        reason = f"{render_term(certificate.smaller)} <_L {render_term(certificate.larger)}"
        return Inequivalent(None, reason=reason, division=certificate)

    heads, core_u, core_v = _common_head(u, v)
    if core_u == core_v:
        return _lift_equivalent(heads, Equivalent(initial_state(core_u)))

    search = _Search(core_u, core_v, meter, ctx, want_order=False)
    hit = search.seed()
    while hit is None:
        if level < ctx.max_level:
            level += 1
            meter.levels = level
            witness = table_witness(u, v, ctx.tables.get(level))
            if witness is not None:
                logger.debug("inequivalent at level %d after %d states", level, meter.nodes)
                return witness
        try:
            hit = search.grow()
        except _SearchClosed:
            return Exhausted("decide_equiv", meter.report(), "search space closed")

    found = search.verdict(hit).certificate
    return _lift_equivalent(heads, found) if heads else found

def decide_equiv(u: Term, v: Term, fuel: Fuel = DEFAULT_FUEL, tables: Optional[TableCache] = None,
                 max_level: int = DEFAULT_EQUIV_MAX_K, size_cap: int = DEFAULT_SIZE_CAP) -> EquivResult:
    """
    Small table levels first, then the spine walk, whose strict verdicts
    also prove inequivalence. Otherwise a common-expansion search is
    dovetailed with the remaining table levels; the first to succeed decides.
    """
    meter = as_meter(fuel)
    try:
        return _decide_equiv(u, v, meter, _context(tables, max_level, size_cap))
    except _FuelExhausted:
        return Exhausted("decide_equiv", meter.report())

def check_equivalence_certificate(u: Term, v: Term, found: Equivalent) -> bool:
    """Both recorded move sequences are legal and end on the common state."""
    try:
        return (replay_moves(u, found.u_moves) == found.common
                and replay_moves(v, found.v_moves) == found.common)
    except InvalidPositionError:
        return False

#--------------------------------------------------------------------------------------
# order

def _compare(u: Term, v: Term, meter: FuelMeter, ctx: _Context) -> OrderResult:
    walk = _spine_walk(u, v, meter, ctx)
    if walk is not None:
        return _walk_verdict(u, v, walk)

    heads, core_u, core_v = _common_head(u, v)
    if core_u == core_v:
        return OrderVerdict(Verdict.EQUAL, _lift_equivalent(heads, Equivalent(initial_state(core_u))))

    search = _Search(core_u, core_v, meter, ctx, want_order=True)
    hit = search.seed()
    while hit is None:
        try:
            hit = search.grow()
        except _SearchClosed:
            return Exhausted("compare", meter.report(), "search space closed")

    found = search.verdict(hit)
    if not heads:
        return found
    if found.relation is Verdict.EQUAL:
        return OrderVerdict(Verdict.EQUAL, _lift_equivalent(heads, found.certificate))
    if found.relation is Verdict.LESS:
        return OrderVerdict(Verdict.LESS, _lift_division(heads, u, v, found.certificate))
    return OrderVerdict(Verdict.GREATER, _lift_division(heads, v, u, found.certificate))

def compare(u: Term, v: Term, fuel: Fuel = DEFAULT_FUEL, tables: Optional[TableCache] = None,
            max_level: int = DEFAULT_EQUIV_MAX_K, size_cap: int = DEFAULT_SIZE_CAP) -> OrderResult:
    """
    Trichotomy for <_L. A-terms go through the spine walk; otherwise, or
    when the walk gives up, expansions of both terms are searched until they
    meet or one reaches a form with a representative of the other on its left.
    """
    meter = as_meter(fuel)
    try:
        return _compare(u, v, meter, _context(tables, max_level, size_cap))
    except _FuelExhausted:
        return Exhausted("compare", meter.report())

#--------------------------------------------------------------------------------------
# prenormal sequences and division trees

@dataclass(frozen=True)
class PrenormalSequence:
    head: Term
    tail: Tuple[Term, ...] = ()
    last_op: str = APPLY

    @property
    def entries(self) -> Tuple[Term, ...]:
        return (self.head,) + self.tail

    def product(self) -> Term:
        if not self.tail or self.last_op == APPLY:
            return apply_all(self.head, self.tail)
        return compose(apply_all(self.head, self.tail[:-1]), self.tail[-1])


def _class_states(w: Term, meter: FuelMeter, ctx: _Context,
                  limit: Optional[int] = None) -> Iterator[State]:
    """Breadth first walk of w's class under every move, in both directions."""
    start = initial_state(w)
    seen = {start}
    layer = [start]
    yield start
    while layer:
        following = []
        for state in layer:
            for new, _ in _neighbours(state, whole_class=True):
                if new in seen or _state_size(new) > ctx.size_cap:
                    continue
                meter.spend()
                seen.add(new)
                following.append(new)
                yield new
                if limit is not None and len(seen) >= limit:
                    return
        layer = following

def _head_index(u: Term, meter: FuelMeter, ctx: _Context) -> _Side:
    heads = _Side(u)
    for state in _class_states(u, meter, ctx, _HEAD_CLASS_LIMIT):
        heads.add(state, None, ())
    return heads

def _is_prenormal(head: Term, args: Tuple[Term, ...], last_op: str,
                  meter: FuelMeter, ctx: _Context) -> bool:
    n = len(args)
    for i in range(n - 1):
        bound = apply_all(head, args[:i])
        found = _compare(args[i + 1], bound, meter, ctx)
        if isinstance(found, Exhausted) or found.relation is Verdict.GREATER:
            return False
    if last_op == COMPOSE and n >= 2:
        found = _compare(args[-1], apply_all(head, args[:n - 2]), meter, ctx)
        if isinstance(found, Exhausted) or found.relation is not Verdict.LESS:
            return False
    return True

def _prenormal(u: Term, v: Term, meter: FuelMeter, ctx: _Context) -> Union[PrenormalSequence, Exhausted]:
    found = _compare(u, v, meter, ctx)
    if isinstance(found, Exhausted):
        return found
    if found.relation is Verdict.GREATER:
        raise NotDominatedError(f"{render_term(u)} is not <=_L {render_term(v)}")
    if found.relation is Verdict.EQUAL:
        return PrenormalSequence(u)

    tried = set()
    first = found.certificate
    tried.add((first.args, first.last_op))
    if _is_prenormal(u, first.args, first.last_op, meter, ctx):
        return PrenormalSequence(u, first.args, first.last_op)

    heads = _head_index(u, meter, ctx)
    for state in _class_states(v, meter, ctx):
        for _, args, last_op in _divisions(state, heads):
            if (args, last_op) in tried:
                continue
            tried.add((args, last_op))
            if _is_prenormal(u, args, last_op, meter, ctx):
                return PrenormalSequence(u, args, last_op)
    return Exhausted("prenormal_decompose", meter.report(), "class of v explored")

def prenormal_decompose(u: Term, v: Term, fuel: Fuel = DEFAULT_FUEL, tables: Optional[TableCache] = None,
                        max_level: int = DEFAULT_EQUIV_MAX_K,
                        size_cap: int = DEFAULT_SIZE_CAP) -> Union[PrenormalSequence, Exhausted]:
    """
    The u-prenormal sequence u_0 u_1 ... ∗ u_n equal to v: u_(i+2) <=_L u_0...u_i
    for i <= n-2 and, when ∗ = ∘, u_n <_L u_0...u_(n-2) (vacuous for n = 1).
    Raises NotDominatedError when v <_L u.
    """
    meter = as_meter(fuel)
    try:
        return _prenormal(u, v, meter, _context(tables, max_level, size_cap))
    except _FuelExhausted:
        return Exhausted("prenormal_decompose", meter.report())


@dataclass(frozen=True)
class DivisionTree:
    label: Term
    children: Tuple["DivisionTree", ...] = ()
    last_op: str = APPLY

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def product(self) -> Term:
        """Re-multiply the children; a leaf is its own label."""
        if self.is_leaf:
            return self.label
        parts = [child.product() for child in self.children]
        if self.last_op == APPLY or len(parts) == 1:
            return apply_all(parts[0], parts[1:])
        return compose(apply_all(parts[0], parts[1:-1]), parts[-1])

    def node_count(self) -> int:
        return 1 + sum(child.node_count() for child in self.children)

    def render(self, indent: int = 0) -> List[str]:
        op = "" if self.is_leaf or self.last_op == APPLY else "  [∘]"
        lines = ["  " * indent + render_term(self.label) + op]
        for child in self.children:
            lines.extend(child.render(indent + 1))
        return lines


def _tree(u: Term, label: Term, meter: FuelMeter, ctx: _Context) -> Union[DivisionTree, Exhausted]:
    found = _compare(label, u, meter, ctx)
    if isinstance(found, Exhausted):
        return found
    if found.relation is not Verdict.GREATER:
        return DivisionTree(label)
    sequence = _prenormal(u, label, meter, ctx)
    if isinstance(sequence, Exhausted):
        return sequence
    children = []
    for entry in sequence.entries:
        child = _tree(u, entry, meter, ctx)
        if isinstance(child, Exhausted):
            return child
        children.append(child)
    return DivisionTree(label, tuple(children), sequence.last_op)

def division_tree(u: Term, v: Term, fuel: Fuel = DEFAULT_FUEL, tables: Optional[TableCache] = None,
                  max_level: int = DEFAULT_EQUIV_MAX_K,
                  size_cap: int = DEFAULT_SIZE_CAP) -> Union[DivisionTree, Exhausted]:
    """Labels <=_L u are leaves; any other label splits into its u-prenormal entries."""
    meter = as_meter(fuel)
    try:
        return _tree(u, v, meter, _context(tables, max_level, size_cap))
    except _FuelExhausted:
        return Exhausted("division_tree", meter.report())


@dataclass(frozen=True)
class LexCertificate:
    u_tree: DivisionTree
    v_tree: DivisionTree
    position: Tuple[int, ...]
    by_fallback: bool = False


def _lex(a: DivisionTree, b: DivisionTree, position: Tuple[int, ...]) -> Tuple[Optional[Verdict], Tuple[int, ...]]:
    """None means a compose at the deciding position; the caller falls back to compare."""
    if a.is_leaf and b.is_leaf:
        return Verdict.EQUAL, position
    if a.is_leaf:
        return Verdict.LESS, position
    if b.is_leaf:
        return Verdict.GREATER, position
    for i, (ca, cb) in enumerate(zip(a.children, b.children)):
        found, where = _lex(ca, cb, position + (i,))
        if found is not Verdict.EQUAL:
            last_a = i == len(a.children) - 1 and a.last_op == COMPOSE
            last_b = i == len(b.children) - 1 and b.last_op == COMPOSE
            return (None if last_a or last_b else found), where
    if len(a.children) == len(b.children):
        if a.last_op == b.last_op:
            return Verdict.EQUAL, position
        return (Verdict.LESS if a.last_op == APPLY else Verdict.GREATER), position
    shorter = a if len(a.children) < len(b.children) else b
    if shorter.last_op == COMPOSE:
        return None, position
    return (Verdict.LESS if shorter is a else Verdict.GREATER), position

def lex_compare_xdivision(u: Term, v: Term, fuel: Fuel = DEFAULT_FUEL, tables: Optional[TableCache] = None,
                          max_level: int = DEFAULT_EQUIV_MAX_K,
                          size_cap: int = DEFAULT_SIZE_CAP) -> OrderResult:
    """
    Compare the x-division forms of u and v entry by entry. A composition
    at the deciding entry is settled by compare on the two labels.
    """
    meter = as_meter(fuel)
    ctx = _context(tables, max_level, size_cap)
    try:
        u_tree = _tree(X, u, meter, ctx)
        if isinstance(u_tree, Exhausted):
            return Exhausted("lex_compare_xdivision", meter.report())
        v_tree = _tree(X, v, meter, ctx)
        if isinstance(v_tree, Exhausted):
            return Exhausted("lex_compare_xdivision", meter.report())
        found, where = _lex(u_tree, v_tree, ())
        if found is None:
            fallback = _compare(u, v, meter, ctx)
            if isinstance(fallback, Exhausted):
                return Exhausted("lex_compare_xdivision", meter.report())
            return OrderVerdict(fallback.relation, LexCertificate(u_tree, v_tree, where, True))
        return OrderVerdict(found, LexCertificate(u_tree, v_tree, where))
    except _FuelExhausted:
        return Exhausted("lex_compare_xdivision", meter.report())

#--------------------------------------------------------------------------------------
# left division, used by the inverse braid action

def _division_impossible(a: Term, b: Term, ctx: _Context) -> Optional[int]:
    # a ≡ b·c forces res(a) into the row of res(b) at every level and assignment
    if len(generators(a) | generators(b)) != 1:
        return None
    top = min(_DIVISION_TABLE_LEVELS, ctx.max_level)
    for level in range(1, top + 1):
        table = ctx.tables.get(level)
        gens = sorted(generators(a) | generators(b))
        columns = _assignment_columns(table.size, gens, seed=level)
        ra = evaluate_many(table, a, columns)
        rb = evaluate_many(table, b, columns)
        for x_a, x_b in zip(ra.tolist(), rb.tolist()):
            if x_b != 0 and x_a != 0 and x_a not in table.row(x_b):
                return level
    return None

def _left_divide(a: Term, b: Term, meter: FuelMeter, ctx: _Context) -> Union[Term, Undefined, Exhausted]:
    found = _compare(b, a, meter, ctx)
    if isinstance(found, Exhausted):
        return found
    if found.relation is not Verdict.LESS:
        return Undefined(f"{render_term(b)} is not <_L {render_term(a)}")
    certificate = found.certificate
    if len(certificate.args) == 1 and certificate.last_op == APPLY:
        return certificate.args[0]

    level = _division_impossible(a, b, ctx)
    if level is not None:
        return Undefined(f"no quotient: residues disagree at level {level}")

    heads = _head_index(b, meter, ctx)
    for state in _class_states(a, meter, ctx):
        if len(state) != 1 or state[0].kind != APPLY:
            continue
        if (state[0].left,) in heads:
            return state[0].right
    return Exhausted("left_divide", meter.report(), "class explored")

def left_divide(a: Term, b: Term, fuel: Fuel = DEFAULT_FUEL, tables: Optional[TableCache] = None,
                max_level: int = DEFAULT_EQUIV_MAX_K,
                size_cap: int = DEFAULT_SIZE_CAP) -> Union[Term, Undefined, Exhausted]:
    """The c with b·c ≡ a, which left cancellation makes unique up to ≡."""
    meter = as_meter(fuel)
    try:
        return _left_divide(a, b, meter, _context(tables, max_level, size_cap))
    except _FuelExhausted:
        return Exhausted("left_divide", meter.report())
