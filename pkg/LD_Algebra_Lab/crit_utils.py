"""
Critical point comparison through table residues.

A single generator term w evaluated with x -> 1 in (2^k, ∗_k) gives a
residue i < 2^k. Once i is nonzero, the 2-adic valuation of i is the
index of the critical point of w, and it no longer depends on k.
Residues that stay 0 up to the level cap are reported as Exhausted.
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Union
import logging

from .lab_config import DEFAULT_MAX_K
from .lab_errors import PreconditionError
from .lab_results import Exhausted, Verdict
from .laver_utils import TableCache, default_cache, eval_term
from .term_utils import Term, is_single_generator, left_power, render_term, right_power, terms_up_to

logger = logging.getLogger(__name__)

# A-term sizes searched by critical_points_between by default
DEFAULT_WITNESS_SIZE = 7


@dataclass(frozen=True)
class CritIndex:
    gamma_index: int
    witness_level: int
    residue: int


def nu2(i: int) -> int:
    """Exponent of the largest power of 2 dividing i > 0."""
    if i <= 0:
        raise ValueError(f"2-adic valuation needs a positive integer, got {i}")
    return (i & -i).bit_length() - 1

def _check_single(w: Term) -> None:
    if not is_single_generator(w):
        raise PreconditionError(f"{render_term(w)} uses generators other than x")

def residue_profile(w: Term, max_k: int = DEFAULT_MAX_K,
                    tables: Optional[TableCache] = None) -> List[int]:
    """Residue of w at every level 1..max_k."""
    _check_single(w)
    tables = tables or default_cache()
    return [eval_term(tables.get(k), w) for k in range(1, max_k + 1)]

def crit_index(w: Term, max_k: int = DEFAULT_MAX_K,
               tables: Optional[TableCache] = None) -> Union[CritIndex, Exhausted]:
    _check_single(w)
    tables = tables or default_cache()
    for k in range(1, max_k + 1):
        residue = eval_term(tables.get(k), w)
        if residue:
            found = CritIndex(nu2(residue), k, residue)
            logger.debug("crit_index %s: %s", render_term(w), found)
            return found
    return Exhausted("crit_index", {"levels": max_k}, "residue is 0 at every level tried")

def compare_crit(u: Term, w: Term, max_k: int = DEFAULT_MAX_K,
                 tables: Optional[TableCache] = None) -> Union[Verdict, Exhausted]:
    left = crit_index(u, max_k, tables)
    if isinstance(left, Exhausted):
        return left
    right = crit_index(w, max_k, tables)
    if isinstance(right, Exhausted):
        return right
    if left.gamma_index < right.gamma_index:
        return Verdict.LESS
    if left.gamma_index > right.gamma_index:
        return Verdict.GREATER
    return Verdict.EQUAL

def kappa_index(n: int, max_k: int = DEFAULT_MAX_K,
                tables: Optional[TableCache] = None) -> Union[int, Exhausted]:
    """γ index of κ_n = cr(j^n j), read off the right power x(x(...(xx)))."""
    if n < 0:
        raise PreconditionError("kappa_index needs n >= 0")
    found = crit_index(right_power(n), max_k, tables)
    if isinstance(found, Exhausted):
        return Exhausted("kappa_index", found.spent, f"κ_{n} not separated up to level {max_k}")
    return found.gamma_index

def f_count(n: int, max_k: int = DEFAULT_MAX_K,
            tables: Optional[TableCache] = None) -> Union[int, Exhausted]:
    """Number of critical points strictly between κ_n and κ_(n+1)."""
    if n < 0:
        raise PreconditionError("f_count needs n >= 0")
    low = kappa_index(n, max_k, tables)
    if isinstance(low, Exhausted):
        return Exhausted("f_count", low.spent, low.reason)
    high = kappa_index(n + 1, max_k, tables)
    if isinstance(high, Exhausted):
        return Exhausted("f_count", high.spent, high.reason)
    return high - low - 1

def min_k_nonzero(i: int, max_k: int = DEFAULT_MAX_K,
                  tables: Optional[TableCache] = None) -> Union[int, Exhausted]:
    """Least k with 1 ∗_k (i mod 2^k) != 0."""
    if i < 1:
        raise PreconditionError("min_k_nonzero needs i >= 1")
    tables = tables or default_cache()
    for k in range(1, max_k + 1):
        table = tables.get(k)
        if table._apply(1, i & (table.size - 1)):
            return k
    return Exhausted("min_k_nonzero", {"levels": max_k})

def critical_points_between(n: int, max_size: int = DEFAULT_WITNESS_SIZE, max_k: int = DEFAULT_MAX_K,
                            tables: Optional[TableCache] = None) -> Union[Dict[int, Term], Exhausted]:
    """
    γ indices strictly between κ_n and κ_(n+1) reached by A-terms with at
    most max_size leaves, each with the first term found for it.
    """
    low = kappa_index(n, max_k, tables)
    if isinstance(low, Exhausted):
        return low
    high = kappa_index(n + 1, max_k, tables)
    if isinstance(high, Exhausted):
        return high
    found: Dict[int, Term] = {}
    for w in terms_up_to(max_size):
        index = crit_index(w, max_k, tables)
        if isinstance(index, CritIndex) and low < index.gamma_index < high:
            found.setdefault(index.gamma_index, w)
    return found

def monogenic_quotient_level(m: int) -> int:
    """
    The free LD algebra on x with x_(m+1) = x is (2^k, ∗_k) for the largest
    k with 2^k | m.
    """
    if m < 1:
        raise PreconditionError("m must be a positive integer")
    return nu2(m)

def left_power_returns(m: int, k: int, tables: Optional[TableCache] = None) -> bool:
    """Whether x_(m+1) evaluates back to x in (2^k, ∗_k)."""
    tables = tables or default_cache()
    return eval_term(tables.get(k), left_power(m + 1)) == 1
