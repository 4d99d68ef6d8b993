import json
from contextlib import redirect_stdout
import sys
import threading

import pytest

from LD_Algebra_Lab.lab_action import (STATUS_DECIDED, STATUS_ERROR, STATUS_OPEN, LxAction, LxJob, to_jsonable,
                                       verdict_status)
from LD_Algebra_Lab.lab_config import OUTPUT_JSON
from LD_Algebra_Lab.lab_errors import PreconditionError
from LD_Algebra_Lab.lab_results import Exhausted, Undefined, Verdict
from LD_Algebra_Lab.lab_worker import LxOutputRelay, LxWorker
from LD_Algebra_Lab.order_utils import DivisionTree, Move
from LD_Algebra_Lab.term_utils import X, apply


class _Echo(LxAction):
    ACTION_ID = "echo"

    def __init__(self):
        super().__init__(self.ACTION_ID, "Echo")

    def run_job(self, job, **kwargs):
        if job.get("fail"):
            raise PreconditionError("asked to fail")
        if job.get("exit") is not None:
            sys.exit(job.exit)
        if job.get("crash"):
            raise RuntimeError("boom")
        kwargs["worker_cb"](50)
        print("to stderr", file=sys.stderr)
        if job.get("open"):
            return self.report_open(job, Exhausted("echo", {"nodes": 3}, "ran dry"))
        return self.report(job, Verdict.LESS, f"said {job.word}", certificate={"word": job.word})


class _Collector(object):
    def __init__(self):
        self.events = []
        self.done = threading.Event()

    def __call__(self, kind, *args):
        self.events.append((kind,) + args)
        if kind == LxWorker.TYPE_FINISHED:
            self.done.set()

    def text(self, kind):
        return "".join(args[0] for k, *args in self.events if k == kind)

    def finished(self):
        return [args for k, *args in self.events if k == LxWorker.TYPE_FINISHED][0]


@pytest.fixture
def run_echo():
    collector = _Collector()
    worker = LxWorker(collector)
    worker.add_action(_Echo())

    def run(params):
        job = LxJob("echo", params)
        worker.add_job(job)
        assert collector.done.wait(10)
        return collector, job

    yield run
    worker.shutdown()


class TestJob:
    def test_attribute_access(self):
        job = LxJob("crit-f", {"n": 2})
        assert job.n == 2
        job.n = 3
        assert job["n"] == 3
        with pytest.raises(AttributeError):
            job.missing

    def test_ids_increase(self):
        assert LxJob("a").job_id < LxJob("b").job_id

    def test_own_attributes_are_not_parameters(self):
        job = LxJob("crit-f", {"n": 2})
        job.action_id = "crit-kappa"
        assert job.action_id == "crit-kappa"
        assert dict(job) == {"n": 2}
        assert LxJob("a", None) == {}


class TestRelay:
    def test_prints_reach_the_channel(self):
        seen = []
        with redirect_stdout(LxOutputRelay(seen.append)):
            print("less")
            print("", end="")
        assert "".join(seen) == "less\n"
        assert "" not in seen

    def test_write_reports_its_length(self):
        relay = LxOutputRelay(lambda text: None)
        assert relay.writable()
        assert relay.write("abc") == 3


class TestWorker:
    def test_output_and_status(self, run_echo):
        collector, job = run_echo({"word": "hi"})
        assert collector.text(LxWorker.TYPE_MESSAGE) == "said hi\n"
        assert collector.text(LxWorker.TYPE_ERROR) == "to stderr\n"
        assert (LxWorker.TYPE_PROGRESS, 50) in collector.events
        assert collector.finished() == [STATUS_DECIDED, "echo", job.job_id]

    def test_json_record(self, run_echo):
        collector, _ = run_echo({"word": "hi", "output": OUTPUT_JSON})
        record = json.loads(collector.text(LxWorker.TYPE_MESSAGE))
        assert record == {"verdict": "less", "certificate": {"word": "hi"}, "witness_level": None,
                          "timings": {}}

    def test_open_outcome(self, run_echo):
        collector, _ = run_echo({"open": True})
        assert collector.text(LxWorker.TYPE_MESSAGE) == "exhausted (echo, nodes 3): ran dry\n"
        assert collector.finished()[0] == STATUS_OPEN

    def test_lab_errors_are_trapped(self, run_echo):
        collector, _ = run_echo({"fail": True})
        assert collector.text(LxWorker.TYPE_ERROR) == "error: asked to fail\n"
        assert collector.finished()[0] == STATUS_ERROR

    def test_exit_is_trapped(self, run_echo):
        collector, _ = run_echo({"exit": 2})
        assert collector.finished()[0] == 2

    def test_crash_is_reported(self, run_echo):
        collector, _ = run_echo({"crash": True})
        assert "internal failure: boom" in collector.text(LxWorker.TYPE_ERROR)
        assert collector.finished()[0] == STATUS_ERROR

    def test_unknown_action(self):
        collector = _Collector()
        worker = LxWorker(collector)
        worker.add_action("not an action")
        assert not worker.has_action("echo")
        worker.add_job(LxJob("echo"))
        assert collector.done.wait(10)
        worker.shutdown()
        assert "unknown job type echo" in collector.text(LxWorker.TYPE_ERROR)
        assert collector.finished()[0] == STATUS_ERROR


class TestJson:
    def test_terms_and_results(self):
        xx = apply(X, X)
        assert to_jsonable(xx) == "xx"
        assert to_jsonable(Verdict.GREATER) == "greater"
        assert to_jsonable(Undefined("no quotient")) == {"reason": "no quotient"}
        assert to_jsonable(Move("expand", 0, (1, 0))) == {"kind": "expand", "factor": 0, "path": [1, 0]}
        tree = DivisionTree(xx, (DivisionTree(X), DivisionTree(X)))
        assert to_jsonable(tree)["children"][0] == {"label": "x", "last_op": "apply", "children": []}
        assert to_jsonable({1: (xx, None)}) == {"1": ["xx", None]}

    def test_status_of_verdicts(self):
        assert verdict_status("exhausted") == STATUS_OPEN
        assert verdict_status("undefined") == STATUS_OPEN
        assert verdict_status("less") == STATUS_DECIDED
