#-----------------------------------------------------------------------------
# lab_act_term.py
#
# Actions for the "term" command: evaluation in a table, equivalence, the
# left-division order and the decompositions built on it.
#
# pylint: disable=missing-docstring
#
#-----------------------------------------------------------------------------
import sys
from time import perf_counter
from typing import Dict, Sequence

from .lab_action import STATUS_ERROR, LxAction, LxJob, search_limits
from .lab_errors import UsageError
from .lab_results import Exhausted
from .laver_utils import eval_term
from .order_utils import (DivisionCertificate, Equivalent, check_equivalence_certificate, compare,
                          decide_equiv, division_tree, lex_compare_xdivision, prenormal_decompose)
from .term_utils import APPLY, LEAF, generator_name, parse_term, render_term, sigma_decompose


def parse_assignments(items: Sequence[str]) -> Dict[int, int]:
    """["x=1", "y=3"] -> {0: 1, 1: 3}; x stays at 1 unless reassigned."""
    assignment = {0: 1}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--assign expects g=i, got {item!r}")
        generator = parse_term(name.strip())
        if generator.kind != LEAF:
            raise UsageError(f"{name!r} is not a generator")
        try:
            assignment[generator.var] = int(value)
        except ValueError:
            raise UsageError(f"{value!r} is not an integer index")
    return assignment

def _product_text(head: str, args: Sequence[str], last_op: str) -> str:
    if not args:
        return head
    parts = [head] + list(args)
    if last_op == APPLY:
        return " · ".join(parts)
    return " · ".join(parts[:-1]) + " ∘ " + parts[-1]

def describe_division(certificate: DivisionCertificate) -> str:
    args = [render_term(a) for a in certificate.args]
    return _product_text(render_term(certificate.smaller), args, certificate.last_op)

#--------------------------------------------------------------------------------------

class LxTermEval(LxAction):

    ACTION_ID = "term-eval"
    NAME = "Evaluate Term"

    def __init__(self) -> None:
        super().__init__(self.ACTION_ID, self.NAME)

    def run_job(self, job: LxJob, **kwargs) -> int:

        term = parse_term(job.expr)
        assignment = parse_assignments(job.get("assign"))
        table = job.tables.get(job.k)
        residue = eval_term(table, term, assignment)
        named = {generator_name(g): i for g, i in sorted(assignment.items())}
        return self.report(job, "decided", str(residue), witness_level=table.k,
                           certificate={"residue": residue, "assignment": named})


class LxTermEquiv(LxAction):

    ACTION_ID = "term-equiv"
    NAME = "Decide Equivalence"

    def __init__(self) -> None:
        super().__init__(self.ACTION_ID, self.NAME)

    def run_job(self, job: LxJob, **kwargs) -> int:

        u, v = parse_term(job.expr1), parse_term(job.expr2)
        start = perf_counter()
        found = decide_equiv(u, v, **search_limits(job))
        timings = {"decide": round(perf_counter() - start, 6)}

        if isinstance(found, Exhausted):
            return self.report_open(job, found, timings)
        if isinstance(found, Equivalent):
            if not check_equivalence_certificate(u, v, found):
                print("error: equivalence certificate failed to replay", file=sys.stderr)
                return STATUS_ERROR
            text = f"equivalent: both expand to {render_term(found.common_term)}"
            return self.report(job, found, text, certificate=found, timings=timings)

        if found.level is None:
            text = f"inequivalent: {found.reason}"
        else:
            named = ", ".join(f"{generator_name(g)}={i}" for g, i in found.assignment)
            text = (f"inequivalent: residues {found.u_residue} and {found.v_residue} "
                    f"at level {found.level} ({named})")
        return self.report(job, found, text, certificate=found, witness_level=found.level, timings=timings)


class LxTermCompare(LxAction):

    ACTION_ID = "term-compare"
    NAME = "Compare Terms"

    def __init__(self) -> None:
        super().__init__(self.ACTION_ID, self.NAME)

    def run_job(self, job: LxJob, **kwargs) -> int:

        u, v = parse_term(job.expr1), parse_term(job.expr2)
        start = perf_counter()
        if job.get("lex"):
            found = lex_compare_xdivision(u, v, **search_limits(job))
        else:
            found = compare(u, v, **search_limits(job))
        timings = {"compare": round(perf_counter() - start, 6)}

        if isinstance(found, Exhausted):
            return self.report_open(job, found, timings)
        text = str(found.relation)
        if job.get("verbose_certificate") and isinstance(found.certificate, DivisionCertificate):
            text += f"\n{render_term(found.certificate.larger)} ≡ {describe_division(found.certificate)}"
        return self.report(job, found.relation, text, certificate=found.certificate, timings=timings)


class LxTermPrenormal(LxAction):

    ACTION_ID = "term-prenormal"
    NAME = "Prenormal Decomposition"

    def __init__(self) -> None:
        super().__init__(self.ACTION_ID, self.NAME)

    def run_job(self, job: LxJob, **kwargs) -> int:

        u, v = parse_term(job.u), parse_term(job.v)
        start = perf_counter()
        found = prenormal_decompose(u, v, **search_limits(job))
        timings = {"prenormal": round(perf_counter() - start, 6)}

        if isinstance(found, Exhausted):
            return self.report_open(job, found, timings)
        text = _product_text(render_term(found.head), [render_term(t) for t in found.tail], found.last_op)
        return self.report(job, "decided", text, certificate=found, timings=timings)


class LxTermTree(LxAction):

    ACTION_ID = "term-tree"
    NAME = "Division Tree"

    def __init__(self) -> None:
        super().__init__(self.ACTION_ID, self.NAME)

    def run_job(self, job: LxJob, **kwargs) -> int:

        u, v = parse_term(job.u), parse_term(job.v)
        start = perf_counter()
        found = division_tree(u, v, **search_limits(job))
        timings = {"tree": round(perf_counter() - start, 6)}

        if isinstance(found, Exhausted):
            return self.report_open(job, found, timings)
        return self.report(job, "decided", "\n".join(found.render()), certificate=found, timings=timings)


class LxTermSigma(LxAction):

    ACTION_ID = "term-sigma"
    NAME = "Composition Normal Form"

    def __init__(self) -> None:
        super().__init__(self.ACTION_ID, self.NAME)

    def run_job(self, job: LxJob, **kwargs) -> int:

        found = sigma_decompose(parse_term(job.expr), job.config.size_cap)
        factors = [render_term(f) for f in found.factors]
        text = f"c = {found.c}: " + " ∘ ".join(factors)
        return self.report(job, "decided", text, certificate={"c": found.c, "factors": factors})
