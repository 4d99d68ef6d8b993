#-----------------------------------------------------------------------------
# lab_act_table.py
#
# Actions for the "table" and "bench" commands: building, showing, checking
# and moving Laver tables in and out of the cache.
#
# pylint: disable=missing-docstring
#
#-----------------------------------------------------------------------------
import os
import sys
from time import perf_counter

import psutil

from .lab_action import STATUS_DECIDED, STATUS_ERROR, LxAction, LxJob
from .laver_utils import (EXHAUSTIVE_LEVEL_CAP, MODE_EXHAUSTIVE, MODE_SAMPLE, build_table, check_invariants,
                          export_csv, load_table, period_lifting_violations, save_table, verify_laws,
                          verify_projection)

# full grids are printed up to this level; above it only rows are listed
_GRID_LEVEL_CAP = 5


def _elapsed(start: float) -> float:
    return round(perf_counter() - start, 6)

#--------------------------------------------------------------------------------------

class LxTableBuild(LxAction):

    ACTION_ID = "table-build"
    NAME = "Build Laver Table"

    def __init__(self) -> None:
        super().__init__(self.ACTION_ID, self.NAME)

    def run_job(self, job: LxJob, **kwargs) -> int:

        start = perf_counter()
        table = build_table(job.k, job.config.table_level_cap, job.config.memory_cap_bytes)
        build_time = _elapsed(start)
        job.tables.put(table)

        summary = {"k": table.k, "size": table.size, "stored_cells": table.stored_cells,
                   "period_of_1": table.period(1)}
        text = (f"A_{table.k}: {table.size} elements, {table.stored_cells} stored cells, "
                f"period of 1 is {table.period(1)} ({build_time:.3f} s)")
        return self.report(job, "built", text, certificate=summary, timings={"build": build_time})


class LxTableShow(LxAction):

    ACTION_ID = "table-show"
    NAME = "Show Laver Table"

    def __init__(self) -> None:
        super().__init__(self.ACTION_ID, self.NAME)

    def run_job(self, job: LxJob, **kwargs) -> int:

        table = job.tables.get(job.k)

        if job.get("csv"):
            export_csv(table, sys.stdout)
            return STATUS_DECIDED

        if table.k <= _GRID_LEVEL_CAP:
            width = len(str(table.size - 1))
            lines = ["∗".rjust(width) + " | " + " ".join(str(n).rjust(width) for n in range(table.size))]
            lines.append("-" * len(lines[0]))
            for m in range(table.size):
                cells = (table._apply(m, n) for n in range(table.size))
                lines.append(str(m).rjust(width) + " | " + " ".join(str(v).rjust(width) for v in cells))
        else:
            lines = [f"{m}\tp={period}\t{' '.join(map(str, row))}" for m, period, row in table.rows()]

        rows = {str(m): list(row) for m, _, row in table.rows()}
        return self.report(job, "shown", "\n".join(lines), certificate={"k": table.k, "rows": rows})


class LxTablePeriod(LxAction):

    ACTION_ID = "table-period"
    NAME = "Row Period"

    def __init__(self) -> None:
        super().__init__(self.ACTION_ID, self.NAME)

    def run_job(self, job: LxJob, **kwargs) -> int:

        table = job.tables.get(job.k)
        period = table.period(job.m)
        return self.report(job, "decided", str(period),
                           certificate={"k": table.k, "m": job.m, "period": period})


class LxTableVerify(LxAction):

    ACTION_ID = "table-verify"
    NAME = "Verify Laver Table"

    def __init__(self) -> None:
        super().__init__(self.ACTION_ID, self.NAME)

    def run_job(self, job: LxJob, **kwargs) -> int:

        table = job.tables.get(job.k)
        if job.get("sample"):
            mode = MODE_SAMPLE
        else:
            mode = job.get("mode") or (MODE_EXHAUSTIVE if table.k <= EXHAUSTIVE_LEVEL_CAP else MODE_SAMPLE)
        timings = {}

        start = perf_counter()
        problems = check_invariants(table)
        laws = verify_laws(table, mode, job.get("sample") or 100_000, job.config.seed,
                           allow_large=job.config.force)
        timings["laws"] = _elapsed(start)

        lines = [f"level {table.k}: {laws.triples_checked} triples ({mode}), "
                 f"{laws.violation_count} law violations, {len(problems)} row problems"]
        lines += [f"  {v.law}: a={v.a} b={v.b} c={v.c}" for v in laws.violations]
        lines += [f"  {p}" for p in problems]

        certificate = {"laws": laws, "row_problems": problems}
        ok = laws.ok and not problems
        if table.k > 1:
            start = perf_counter()
            low = job.tables.get(table.k - 1)
            projection = verify_projection(table, low, mode, job.get("sample") or 100_000,
                                           job.config.seed, allow_large=job.config.force)
            lifting = period_lifting_violations(low, table)
            timings["projection"] = _elapsed(start)
            lines.append(f"projection to level {low.k}: {projection.violation_count} violations, "
                         f"{len(lifting)} period lifting violations")
            certificate["projection"] = projection
            certificate["period_lifting"] = lifting
            ok = ok and projection.ok and not lifting

        verdict = "ok" if ok else "violations"
        return self.report(job, verdict, "\n".join(lines), certificate=certificate, timings=timings,
                           status=STATUS_DECIDED if ok else STATUS_ERROR)


class LxTableExport(LxAction):

    ACTION_ID = "table-export"
    NAME = "Export Laver Table"

    def __init__(self) -> None:
        super().__init__(self.ACTION_ID, self.NAME)

    def run_job(self, job: LxJob, **kwargs) -> int:

        table = job.tables.get(job.k)
        if job.get("csv"):
            with open(job.path, "w", encoding="utf-8", newline="") as fp:
                export_csv(table, fp)
        else:
            save_table(table, job.path)
        return self.report(job, "exported", f"level {table.k} written to {job.path}",
                           certificate={"k": table.k, "path": job.path})


class LxTableImport(LxAction):

    ACTION_ID = "table-import"
    NAME = "Import Laver Table"

    def __init__(self) -> None:
        super().__init__(self.ACTION_ID, self.NAME)

    def run_job(self, job: LxJob, **kwargs) -> int:

        table = load_table(job.path)
        problems = check_invariants(table)
        if problems:
            for problem in problems:
                print(problem, file=sys.stderr)
            return STATUS_ERROR
        job.tables.put(table)
        return self.report(job, "imported", f"level {table.k} imported from {job.path}",
                           certificate={"k": table.k, "path": job.path})


class LxBenchTable(LxAction):

    ACTION_ID = "bench-table"
    NAME = "Benchmark Table Build"

    def __init__(self) -> None:
        super().__init__(self.ACTION_ID, self.NAME)

    def run_job(self, job: LxJob, **kwargs) -> int:

        process = psutil.Process()
        rss_before = process.memory_info().rss
        repeats = max(job.get("repeat") or 1, 1)
        times = []
        table = None
        for i in range(repeats):
            start = perf_counter()
            table = build_table(job.k, job.config.table_level_cap, job.config.memory_cap_bytes)
            times.append(_elapsed(start))
            kwargs.get("worker_cb", lambda amount: None)(int(100 * (i + 1) / repeats))
        rss_growth = max(process.memory_info().rss - rss_before, 0)

        timings = {"build_min": min(times), "build_max": max(times)}
        if job.tables.cache_dir is not None:
            os.makedirs(job.tables.cache_dir, exist_ok=True)
            path = job.tables.table_path(table.k) + ".bench"
            start = perf_counter()
            save_table(table, path)
            timings["save"] = _elapsed(start)
            start = perf_counter()
            load_table(path)
            timings["load"] = _elapsed(start)
            os.remove(path)

        text = (f"A_{table.k}: build {min(times):.4f} s (best of {repeats}), "
                f"{table.stored_cells} stored cells, rss growth {rss_growth // 1024} KiB")
        if "load" in timings:
            text += f", save {timings['save']:.4f} s, load {timings['load']:.4f} s"
        return self.report(job, "measured", text, timings=timings,
                           certificate={"k": table.k, "stored_cells": table.stored_cells,
                                        "rss_growth_bytes": rss_growth})
