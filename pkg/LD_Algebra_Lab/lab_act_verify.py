#-----------------------------------------------------------------------------
# lab_act_verify.py
#
# Action for "verify all": runs the invariant suite of lab_checks, on a pool
# of threads when asked to.
#
# pylint: disable=missing-docstring
#
#-----------------------------------------------------------------------------
from time import perf_counter

import psutil

from .lab_action import STATUS_DECIDED, STATUS_ERROR, STATUS_OPEN, LxAction, LxJob
from .lab_checks import CHECKS, EXHAUSTED, FAILED, FULL, PASSED, QUICK, CheckContext, CheckResult, run_checks


def default_threads() -> int:
    return psutil.cpu_count(logical=False) or 1

#--------------------------------------------------------------------------------------

class LxVerifyAll(LxAction):

    ACTION_ID = "verify-all"
    NAME = "Invariant Suite"

    def __init__(self) -> None:
        super().__init__(self.ACTION_ID, self.NAME)

    def run_job(self, job: LxJob, **kwargs) -> int:

        ctx = CheckContext(job.tables, job.config, FULL if job.get("full") else QUICK)
        names = job.get("checks") or None
        threads = job.get("threads") or default_threads()
        progress = kwargs.get("worker_cb")
        done = []

        def on_done(result: CheckResult) -> None:
            done.append(result.name)
            if progress is not None:
                progress(int(100 * len(done) / total))

        total = len(names or CHECKS)

        start = perf_counter()
        results = run_checks(ctx, names, threads, on_done)
        elapsed = round(perf_counter() - start, 3)

        if any(r.status == FAILED for r in results):
            verdict, status = FAILED, STATUS_ERROR
        elif any(r.status == EXHAUSTED for r in results):
            verdict, status = EXHAUSTED, STATUS_OPEN
        else:
            verdict, status = PASSED, STATUS_DECIDED

        lines = []
        for r in results:
            line = f"{r.status:<10} {r.name:<18} {r.checked} cases, {r.seconds:.3f} s"
            if r.open_cases:
                line += f", {r.open_cases} left open"
            lines.append(line)
            lines.extend(f"    {message}" for message in r.failures)
        lines.append(f"{verdict} ({len(results)} checks, {elapsed:.3f} s on {threads} threads)")

        timings = {r.name: r.seconds for r in results}
        timings["total"] = elapsed
        return self.report(job, verdict, "\n".join(lines), certificate=results, timings=timings,
                           status=status)
