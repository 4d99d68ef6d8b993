#-----------------------------------------------------------------------------
# lab_act_crit.py
#
# Actions for the "crit" command: critical point indices read off table
# residues, the critical sequence κ_n and the counts f(n).
#
# pylint: disable=missing-docstring
#
#-----------------------------------------------------------------------------
from time import perf_counter

from .crit_utils import (DEFAULT_WITNESS_SIZE, compare_crit, crit_index, critical_points_between,
                         f_count, kappa_index, min_k_nonzero)
from .lab_action import LxAction, LxJob
from .lab_results import Exhausted
from .term_utils import parse_term, render_term


def _elapsed(start: float) -> dict:
    return {"crit": round(perf_counter() - start, 6)}

#--------------------------------------------------------------------------------------

class LxCritIndex(LxAction):

    ACTION_ID = "crit-index"
    NAME = "Critical Point Index"

    def __init__(self) -> None:
        super().__init__(self.ACTION_ID, self.NAME)

    def run_job(self, job: LxJob, **kwargs) -> int:

        start = perf_counter()
        found = crit_index(parse_term(job.expr), job.config.max_k, job.tables)
        if isinstance(found, Exhausted):
            return self.report_open(job, found, _elapsed(start))
        return self.report(job, "decided", str(found.gamma_index), certificate=found,
                           witness_level=found.witness_level, timings=_elapsed(start))


class LxCritCompare(LxAction):

    ACTION_ID = "crit-compare"
    NAME = "Compare Critical Points"

    def __init__(self) -> None:
        super().__init__(self.ACTION_ID, self.NAME)

    def run_job(self, job: LxJob, **kwargs) -> int:

        start = perf_counter()
        u, w = parse_term(job.expr1), parse_term(job.expr2)
        found = compare_crit(u, w, job.config.max_k, job.tables)
        if isinstance(found, Exhausted):
            return self.report_open(job, found, _elapsed(start))

        # tables are cached by now, so the indices are cheap to recompute
        left = crit_index(u, job.config.max_k, job.tables)
        right = crit_index(w, job.config.max_k, job.tables)
        level = max(left.witness_level, right.witness_level)
        return self.report(job, found, str(found), certificate={"u": left, "w": right},
                           witness_level=level, timings=_elapsed(start))


class LxCritKappa(LxAction):

    ACTION_ID = "crit-kappa"
    NAME = "Critical Sequence"

    def __init__(self) -> None:
        super().__init__(self.ACTION_ID, self.NAME)

    def run_job(self, job: LxJob, **kwargs) -> int:

        start = perf_counter()
        found = kappa_index(job.n, job.config.max_k, job.tables)
        if isinstance(found, Exhausted):
            return self.report_open(job, found, _elapsed(start))
        return self.report(job, "decided", str(found), certificate={"n": job.n, "gamma_index": found},
                           timings=_elapsed(start))


class LxCritF(LxAction):

    ACTION_ID = "crit-f"
    NAME = "Critical Points Between κ_n and κ_n+1"

    def __init__(self) -> None:
        super().__init__(self.ACTION_ID, self.NAME)

    def run_job(self, job: LxJob, **kwargs) -> int:

        start = perf_counter()
        found = f_count(job.n, job.config.max_k, job.tables)
        if isinstance(found, Exhausted):
            return self.report_open(job, found, _elapsed(start))

        certificate = {"n": job.n, "f": found}
        text = str(found)
        if job.get("witnesses"):
            between = critical_points_between(job.n, job.get("max_size") or DEFAULT_WITNESS_SIZE,
                                              job.config.max_k, job.tables)
            if isinstance(between, dict):
                certificate["witnesses"] = {str(g): render_term(t) for g, t in sorted(between.items())}
                text += "".join(f"\n  γ_{g}: {render_term(t)}" for g, t in sorted(between.items()))
        return self.report(job, "decided", text, certificate=certificate, timings=_elapsed(start))


class LxCritMinK(LxAction):

    ACTION_ID = "crit-mink"
    NAME = "Least Separating Level"

    def __init__(self) -> None:
        super().__init__(self.ACTION_ID, self.NAME)

    def run_job(self, job: LxJob, **kwargs) -> int:

        start = perf_counter()
        found = min_k_nonzero(job.i, job.config.max_k, job.tables)
        if isinstance(found, Exhausted):
            return self.report_open(job, found, _elapsed(start))
        return self.report(job, "decided", str(found), certificate={"i": job.i, "k": found},
                           witness_level=found, timings=_elapsed(start))

