"""
Invariant suite run by `verify all`.

Every check takes a CheckContext and returns a CheckResult. Checks only
read the shared tables, so the suite may run them on a pool of threads.
The quick scale keeps a run to seconds; --full uses the acceptance sizes.
"""
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from itertools import product
from time import perf_counter
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple
import logging

import numpy as np

from .braid_utils import EMPTY, BraidWord, TermSequence, act, alpha_of, parse_braid_word, sigma
from .crit_utils import crit_index, f_count, kappa_index, nu2, residue_profile
from .lab_config import Config
from .lab_errors import TableFileError, UsageError
from .lab_results import Exhausted, Undefined, Verdict
from .laver_utils import (MODE_EXHAUSTIVE, MODE_SAMPLE, TableCache, table_from_bytes, table_to_bytes,
                          verify_laws, verify_projection)
from .order_utils import (DivisionCertificate, Equivalent, check_division_certificate, check_equivalence_certificate,
                          compare, decide_equiv, evaluate_many, expand_once, expansion_sites, lex_compare_xdivision)
from .term_utils import (X, Term, apply, compose, iterate, iterate_pair, leaf, left_power, parse_term,
                         random_term, render_term, sigma_decompose, terms_up_to)

logger = logging.getLogger(__name__)

PASSED = "passed"
FAILED = "failed"
EXHAUSTED = "exhausted"

# failures kept verbatim in a result
_REPORTED_FAILURES = 10


@dataclass(frozen=True)
class Scale:
    oracle_levels: int
    sampled_law_levels: Tuple[int, ...]
    sampled_projection: Tuple[int, int]
    residue_terms: int
    order_size: int
    order_random_pairs: int
    lex_size: int
    cancellation_triples: int
    iterate_n: int
    absorbed_size: int
    iterate_pair_levels: int
    iterate_pair_n: int
    braid_size: int
    braid_words: int
    format_levels: int


QUICK = Scale(oracle_levels=6, sampled_law_levels=(10,), sampled_projection=(10, 5), residue_terms=50,
              order_size=4, order_random_pairs=50, lex_size=3, cancellation_triples=50, iterate_n=2, absorbed_size=3,
              iterate_pair_levels=4, iterate_pair_n=5, braid_size=4, braid_words=20, format_levels=8)

FULL = Scale(oracle_levels=8, sampled_law_levels=(10, 14, 16), sampled_projection=(16, 8), residue_terms=200,
             order_size=5, order_random_pairs=500, lex_size=5, cancellation_triples=500, iterate_n=3, absorbed_size=4,
             iterate_pair_levels=5, iterate_pair_n=6, braid_size=5, braid_words=200, format_levels=12)


@dataclass
class CheckContext:
    tables: TableCache
    config: Config
    scale: Scale = QUICK

    def rng(self, salt: int) -> np.random.Generator:
        return np.random.default_rng([self.config.seed, salt])

    def limits(self) -> Dict[str, object]:
        return {"fuel": self.config.fuel, "tables": self.tables,
                "max_level": self.config.equiv_max_k, "size_cap": self.config.size_cap}


@dataclass
class CheckResult:
    name: str
    status: str = PASSED
    checked: int = 0
    failures: List[str] = field(default_factory=list)
    open_cases: int = 0
    seconds: float = 0.0

    def fail(self, message: str) -> None:
        self.status = FAILED
        if len(self.failures) < _REPORTED_FAILURES:
            self.failures.append(message)

    def left_open(self) -> None:
        self.open_cases += 1
        if self.status == PASSED:
            self.status = EXHAUSTED

#--------------------------------------------------------------------------------------
# tables

def brute_force_table(k: int) -> List[List[int]]:
    """Every m ∗ n from the defining recursion, rows from the top down, no periods."""
    size = 1 << k
    grid = [[0] * size for _ in range(size)]
    grid[0] = list(range(size))
    for m in range(size - 1, 0, -1):
        row = grid[m]
        row[1] = (m + 1) % size
        for n in range(2, size):
            row[n] = grid[row[n - 1]][row[1]]
    return grid

def check_table_oracle(ctx: CheckContext, result: CheckResult) -> None:
    for k in range(1, ctx.scale.oracle_levels + 1):
        table = ctx.tables.get(k)
        grid = np.asarray(brute_force_table(k), dtype=np.int64)
        r = np.arange(table.size, dtype=np.int64)
        m, n = np.meshgrid(r, r, indexing="ij")
        bad = np.argwhere(table.apply_many(m, n) != grid)
        result.checked += table.size * table.size
        for i, j in bad[:_REPORTED_FAILURES]:
            result.fail(f"level {k}: {i} * {j} differs from the recursion")

def check_laws(ctx: CheckContext, result: CheckResult) -> None:
    for k in range(1, 7):
        report = verify_laws(ctx.tables.get(k), MODE_EXHAUSTIVE)
        result.checked += report.triples_checked
        for v in report.violations:
            result.fail(f"level {k}: {v.law} at ({v.a}, {v.b}, {v.c})")
    for k in ctx.scale.sampled_law_levels:
        if k > ctx.config.max_k:
            continue
        report = verify_laws(ctx.tables.get(k), MODE_SAMPLE, 100_000, ctx.config.seed)
        result.checked += report.triples_checked
        for v in report.violations:
            result.fail(f"level {k}: {v.law} at ({v.a}, {v.b}, {v.c})")

def check_projection(ctx: CheckContext, result: CheckResult) -> None:
    for high in range(2, 7):
        for low in range(1, high):
            report = verify_projection(ctx.tables.get(high), ctx.tables.get(low), MODE_EXHAUSTIVE)
            result.checked += report.triples_checked
            for v in report.violations:
                result.fail(f"{high} -> {low}: {v.law} at ({v.a}, {v.b})")
    high, low = ctx.scale.sampled_projection
    if high <= ctx.config.max_k:
        report = verify_projection(ctx.tables.get(high), ctx.tables.get(low), MODE_SAMPLE,
                                   100_000, ctx.config.seed)
        result.checked += report.triples_checked
        for v in report.violations:
            result.fail(f"{high} -> {low}: {v.law} at ({v.a}, {v.b})")

def check_format(ctx: CheckContext, result: CheckResult) -> None:
    for k in range(1, ctx.scale.format_levels + 1):
        table = ctx.tables.get(k)
        data = table_to_bytes(table)
        again = table_from_bytes(data)
        result.checked += 1
        if again != table or table_to_bytes(again) != data:
            result.fail(f"level {k} does not survive a round trip")

    data = table_to_bytes(ctx.tables.get(3))
    for i in range(len(data)):
        corrupted = bytearray(data)
        corrupted[i] ^= 0xff
        result.checked += 1
        try:
            table_from_bytes(bytes(corrupted))
        except TableFileError:
            continue
        result.fail(f"flipping byte {i} of a level 3 file went unnoticed")

#--------------------------------------------------------------------------------------
# critical points

def check_known_values(ctx: CheckContext, result: CheckResult) -> None:
    max_k = ctx.config.max_k
    for n, expected in ((0, 0), (1, 0), (2, 1)):
        found = f_count(n, max_k, ctx.tables)
        result.checked += 1
        if isinstance(found, Exhausted):
            result.left_open()
        elif found != expected:
            result.fail(f"f({n}) = {found}, expected {expected}")
    for n in range(3):
        found = kappa_index(n, max_k, ctx.tables)
        result.checked += 1
        if isinstance(found, Exhausted):
            result.left_open()
        elif found != n:
            result.fail(f"κ_{n} has index {found}, expected {n}")

    witness = parse_term("((xx)x)(xx)")
    found = crit_index(witness, max_k, ctx.tables)
    low, high = kappa_index(2, max_k, ctx.tables), kappa_index(3, max_k, ctx.tables)
    result.checked += 1
    if any(isinstance(v, Exhausted) for v in (found, low, high)):
        result.left_open()
    elif not low < found.gamma_index < high:
        result.fail(f"{render_term(witness)} has index {found.gamma_index}, not between {low} and {high}")

def check_left_powers(ctx: CheckContext, result: CheckResult) -> None:
    for m in range(1, 17):
        found = crit_index(left_power(m), ctx.config.max_k, ctx.tables)
        result.checked += 1
        if isinstance(found, Exhausted):
            result.left_open()
        elif found.gamma_index != nu2(m):
            result.fail(f"x_({m}) has index {found.gamma_index}, expected {nu2(m)}")

def check_residue_stability(ctx: CheckContext, result: CheckResult) -> None:
    rng = ctx.rng(6)
    for _ in range(ctx.scale.residue_terms):
        w = random_term(int(rng.integers(1, 8)), rng)
        profile = residue_profile(w, ctx.config.max_k, ctx.tables)
        result.checked += 1
        first = next((k for k, r in enumerate(profile, start=1) if r), None)
        if first is None:
            continue
        base = profile[first - 1]
        for level in range(first + 1, len(profile) + 1):
            residue = profile[level - 1]
            if residue % (1 << first) != base or nu2(residue) != nu2(base):
                result.fail(f"{render_term(w)}: level {level} residue {residue} vs {base} at level {first}")
                break

def check_not_reproducible(ctx: CheckContext, result: CheckResult) -> None:
    # the next critical point lies far beyond any table we can build
    for name, found in (("κ_4", kappa_index(4, ctx.config.max_k, ctx.tables)),
                        ("f(3)", f_count(3, ctx.config.max_k, ctx.tables))):
        result.checked += 1
        if not isinstance(found, Exhausted):
            result.fail(f"{name} returned {found} instead of exhausted")

#--------------------------------------------------------------------------------------
# order

def _certificate_holds(ctx: CheckContext, verdict, u: Term, v: Term) -> Optional[bool]:
    """None when the check itself ran out of fuel."""
    certificate = verdict.certificate
    if isinstance(certificate, Equivalent):
        return check_equivalence_certificate(u, v, certificate)
    if isinstance(certificate, DivisionCertificate):
        if check_division_certificate(certificate):
            return True
        found = decide_equiv(certificate.product(), certificate.larger, **ctx.limits())
        if isinstance(found, Exhausted):
            return None
        return isinstance(found, Equivalent)
    return False

def _random_pairs(ctx: CheckContext) -> List[Tuple[Term, Term]]:
    # the order and lex checks both draw these
    rng = ctx.rng(7)
    return [(random_term(int(rng.integers(1, 8)), rng), random_term(int(rng.integers(1, 8)), rng))
            for _ in range(ctx.scale.order_random_pairs)]

def check_order(ctx: CheckContext, result: CheckResult) -> None:
    terms = terms_up_to(ctx.scale.order_size)
    relation: Dict[Tuple[int, int], Verdict] = {}

    for i, j in product(range(len(terms)), repeat=2):
        if (j, i) in relation:
            continue
        u, v = terms[i], terms[j]
        found = compare(u, v, **ctx.limits())
        result.checked += 1
        if isinstance(found, Exhausted):
            result.fail(f"{render_term(u)} vs {render_term(v)} left undecided ({found.reason or 'out of fuel'})")
            continue
        holds = _certificate_holds(ctx, found, u, v)
        if holds is None:
            result.fail(f"certificate for {render_term(u)} vs {render_term(v)} left unchecked")
        elif not holds:
            result.fail(f"bad certificate for {render_term(u)} vs {render_term(v)}")
        relation[(i, j)] = found.relation
        back = compare(v, u, **ctx.limits())
        if isinstance(back, Exhausted):
            result.fail(f"{render_term(v)} vs {render_term(u)} left undecided")
        elif back.relation is not found.relation.flipped():
            result.fail(f"antisymmetry fails on {render_term(u)}, {render_term(v)}")
        relation[(j, i)] = found.relation.flipped()

    def below(a: int, b: int) -> Optional[Verdict]:
        return relation.get((a, b))

    for a, b, c in product(range(len(terms)), repeat=3):
        if below(a, b) is Verdict.LESS and below(b, c) is Verdict.LESS and below(a, c) not in (None, Verdict.LESS):
            result.fail(f"transitivity fails on {render_term(terms[a])} < {render_term(terms[b])} "
                        f"< {render_term(terms[c])}")

    for u, v in _random_pairs(ctx):
        found = compare(u, v, **ctx.limits())
        result.checked += 1
        if isinstance(found, Exhausted):
            result.left_open()
            continue
        back = compare(v, u, **ctx.limits())
        if not isinstance(back, Exhausted) and back.relation is not found.relation.flipped():
            result.fail(f"antisymmetry fails on {render_term(u)}, {render_term(v)}")

def check_lex_agreement(ctx: CheckContext, result: CheckResult) -> None:
    terms = terms_up_to(ctx.scale.lex_size)
    for u, v in list(product(terms, repeat=2)) + _random_pairs(ctx):
        direct = compare(u, v, **ctx.limits())
        lex = lex_compare_xdivision(u, v, **ctx.limits())
        result.checked += 1
        if isinstance(direct, Exhausted) or isinstance(lex, Exhausted):
            result.left_open()
        elif direct.relation is not lex.relation:
            result.fail(f"{render_term(u)} vs {render_term(v)}: compare {direct.relation}, lex {lex.relation}")

def expanded_once(u: Term) -> Term:
    """u itself when it has no a(bc) left to expand, else u with its first expansion site expanded."""
    sites = expansion_sites(u)
    return expand_once(u, sites[0]) if sites else u

def check_cancellation(ctx: CheckContext, result: CheckResult) -> None:
    """u·v against u'·w with u' an expansion of u, so the left factors differ as written."""
    rng = ctx.rng(8)
    for _ in range(ctx.scale.cancellation_triples):
        u, v, w = (random_term(int(rng.integers(1, 6)), rng) for _ in range(3))
        other = expanded_once(u)
        named = f"{render_term(u)}·{render_term(v)} vs {render_term(other)}·{render_term(w)}"
        result.checked += 1

        whole = decide_equiv(apply(u, v), apply(other, w), **ctx.limits())
        parts = decide_equiv(v, w, **ctx.limits())
        if isinstance(whole, Exhausted) or isinstance(parts, Exhausted):
            result.fail(f"{named}: equivalence left undecided")
        elif isinstance(whole, Equivalent) != isinstance(parts, Equivalent):
            result.fail(f"cancellation fails for {named}")

        outer = compare(apply(u, v), apply(other, w), **ctx.limits())
        inner = compare(v, w, **ctx.limits())
        if isinstance(outer, Exhausted) or isinstance(inner, Exhausted):
            result.fail(f"{named}: order left undecided")
        elif outer.relation is not inner.relation:
            result.fail(f"{named}: {outer.relation} but {render_term(v)} vs {render_term(w)} is {inner.relation}")

        grown = compare(u, apply(u, v), **ctx.limits())
        if isinstance(grown, Exhausted):
            result.fail(f"{render_term(u)} vs {render_term(apply(u, v))} left undecided")
        elif grown.relation is not Verdict.LESS:
            result.fail(f"{render_term(u)} is not below {render_term(apply(u, v))}")

def absorbing_iterate(ctx: CheckContext, p: Term, max_n: int) -> Optional[int]:
    """The first n ≤ max_n with p <_L x^(n) and p·x^(n) ≡ x^(n + c(p)), None when there is none."""
    c = len(sigma_decompose(p).factors)
    for n in range(max_n + 1):
        target = iterate(X, n)
        below = compare(p, target, **ctx.limits())
        if isinstance(below, Exhausted) or below.relation is not Verdict.LESS:
            continue
        found = decide_equiv(apply(p, target), iterate(X, n + c), **ctx.limits())
        if isinstance(found, Equivalent):
            return n
    return None

def check_iterates(ctx: CheckContext, result: CheckResult) -> None:
    for w in (X, apply(X, X)):
        for n in range(ctx.scale.iterate_n + 1):
            target = iterate(w, n + 1)
            for i in range(n + 1):
                found = decide_equiv(apply(iterate(w, i), iterate(w, n)), target, **ctx.limits())
                result.checked += 1
                if isinstance(found, Exhausted):
                    result.left_open()
                elif not isinstance(found, Equivalent):
                    result.fail(f"w^({i}) w^({n}) is not w^({n + 1}) for w = {render_term(w)}")

    for p in terms_up_to(ctx.scale.absorbed_size):
        result.checked += 1
        if absorbing_iterate(ctx, p, p.size + 1) is None:
            result.fail(f"no x^(n) above {render_term(p)} absorbs it")

    j, k = leaf(0), leaf(1)
    for level in range(1, ctx.scale.iterate_pair_levels + 1):
        table = ctx.tables.get(level)
        r = np.arange(table.size, dtype=np.int64)
        jj, kk = np.meshgrid(r, r, indexing="ij")
        columns = {0: jj.ravel(), 1: kk.ravel()}
        expected = evaluate_many(table, compose(j, k), columns)
        for n in range(ctx.scale.iterate_pair_n + 1):
            found = evaluate_many(table, compose(iterate_pair(n + 1), iterate_pair(n)), columns)
            result.checked += 1
            if not np.array_equal(found, expected):
                result.fail(f"I_{n + 1} ∘ I_{n} differs from j∘k at level {level}")

    # and by rewriting: I_(n+1) ∘ I_n is n rotations away from j∘k
    for n in range(ctx.scale.iterate_pair_n + 1):
        found = decide_equiv(compose(iterate_pair(n + 1), iterate_pair(n)), compose(j, k), **ctx.limits())
        result.checked += 1
        if isinstance(found, Exhausted):
            result.left_open()
        elif not isinstance(found, Equivalent):
            result.fail(f"I_{n + 1} ∘ I_{n} is not rewritten to j∘k")

#--------------------------------------------------------------------------------------
# braids

def check_braids(ctx: CheckContext, result: CheckResult) -> None:
    for text, word in (("x", EMPTY), ("xx", sigma(1)), ("x(xx)", parse_braid_word("s2 s1"))):
        result.checked += 1
        if alpha_of(parse_term(text)) != word:
            result.fail(f"α of {text} is not {word}")

    for b in terms_up_to(ctx.scale.braid_size):
        found = act(alpha_of(b), TermSequence(), **ctx.limits())
        result.checked += 1
        if isinstance(found, (Exhausted, Undefined)):
            result.left_open()
            continue
        entries = found.trimmed()
        if len(entries) > 1:
            result.fail(f"α of {render_term(b)} moved entries past the first: {found}")
            continue
        first = entries[0] if entries else X
        same = decide_equiv(first, b, **ctx.limits())
        if isinstance(same, Exhausted):
            result.left_open()
        elif not isinstance(same, Equivalent):
            result.fail(f"α of {render_term(b)} produced {render_term(first)}")

    found = act(sigma(1, -1), TermSequence((X, apply(X, X))), **ctx.limits())
    result.checked += 1
    if not isinstance(found, (Undefined, Exhausted)):
        result.fail(f"S1 on ⟨x, xx⟩ gave {found} instead of undefined")
    elif isinstance(found, Exhausted):
        result.left_open()

    # the braid relations hold up to equivalence of the entries
    samples = [TermSequence(), TermSequence((apply(X, X), X, apply(X, X))),
               TermSequence((parse_term("x(xx)"), apply(X, X)))]
    pairs = [(parse_braid_word(f"s{i} s{i + 1} s{i}"), parse_braid_word(f"s{i + 1} s{i} s{i + 1}")) for i in (1, 2)]
    pairs += [(parse_braid_word(f"s{i} s{j}"), parse_braid_word(f"s{j} s{i}")) for i, j in ((1, 3), (1, 4), (2, 4))]
    for (left, right), v in product(pairs, samples):
        result.checked += 1
        same = _same_entries(ctx, act(left, v, **ctx.limits()), act(right, v, **ctx.limits()))
        if same is None:
            result.left_open()
        elif not same:
            result.fail(f"{left} and {right} act differently on {v}")

    rng = ctx.rng(9)
    for _ in range(ctx.scale.braid_words):
        w = BraidWord(tuple((int(rng.integers(1, 4)), int(rng.choice((-1, 1))))
                            for _ in range(int(rng.integers(1, 5)))))
        for v in samples:
            there = act(w, v, **ctx.limits())
            if isinstance(there, Undefined):
                continue
            result.checked += 1
            if isinstance(there, Exhausted):
                result.left_open()
                continue
            back = act(w * w.inverse(), v, **ctx.limits())
            if isinstance(back, Undefined):
                result.fail(f"{w} acts on {v} but {w * w.inverse()} does not: {back.reason}")
                continue
            same = _same_entries(ctx, back, v)
            if same is None:
                result.left_open()
            elif not same:
                result.fail(f"{w * w.inverse()} moved {v} to {back}")

def _same_entries(ctx: CheckContext, a, b) -> Optional[bool]:
    """Entrywise equivalence of two action results; None when anything is left open."""
    if not (isinstance(a, TermSequence) and isinstance(b, TermSequence)):
        return None
    for i in range(1, max(len(a.entries), len(b.entries)) + 1):
        found = decide_equiv(a.entry(i), b.entry(i), **ctx.limits())
        if isinstance(found, Exhausted):
            return None
        if not isinstance(found, Equivalent):
            return False
    return True

#--------------------------------------------------------------------------------------

CHECKS: Dict[str, Callable[[CheckContext, CheckResult], None]] = {
    "table-oracle": check_table_oracle,
    "laws": check_laws,
    "projection": check_projection,
    "known-values": check_known_values,
    "left-powers": check_left_powers,
    "residue-stability": check_residue_stability,
    "order": check_order,
    "lex-agreement": check_lex_agreement,
    "cancellation": check_cancellation,
    "iterates": check_iterates,
    "braids": check_braids,
    "not-reproducible": check_not_reproducible,
    "format": check_format,
}

def run_check(name: str, ctx: CheckContext) -> CheckResult:
    result = CheckResult(name)
    start = perf_counter()
    CHECKS[name](ctx, result)
    result.seconds = round(perf_counter() - start, 3)
    logger.info("check %s: %s (%d cases, %.3f s)", name, result.status, result.checked, result.seconds)
    return result

def run_checks(ctx: CheckContext, names: Optional[Sequence[str]] = None, threads: int = 1,
               on_done: Optional[Callable[[CheckResult], None]] = None) -> List[CheckResult]:
    """Results come back in the order of `names`, whatever order the threads finish in."""
    names = list(names or CHECKS)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise UsageError(f"unknown checks: {', '.join(unknown)}")

    # building the levels up front keeps the threads from queueing on the cache lock
    top = max(ctx.scale.oracle_levels, ctx.scale.format_levels, 6)
    for k in range(1, min(top, ctx.config.max_k) + 1):
        ctx.tables.get(k)

    results: Dict[str, CheckResult] = {}
    with ThreadPoolExecutor(max_workers=max(threads, 1)) as pool:
        futures = {pool.submit(run_check, name, ctx): name for name in names}
        for future in as_completed(futures):
            result = future.result()
            results[result.name] = result
            if on_done is not None:
                on_done(result)
    return [results[name] for name in names]

def iter_failures(results: Sequence[CheckResult]) -> Iterator[Tuple[str, str]]:
    for result in results:
        for message in result.failures:
            yield result.name, message

