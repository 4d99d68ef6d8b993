#-----------------------------------------------------------------------------
# lab_action.py
#
# Part of the job dispatch system: a "Job" names an action and carries its
# parameters, an "Action" knows how to run one kind of job.
#
#    Job    - an action id plus a dictionary of parameter values
#
#    Action - runs a job and returns an exit status
#
# Actions print their results; the worker captures that output and relays it
# through its callback.
#
# pylint: disable=missing-docstring
#
#-----------------------------------------------------------------------------
import json
import logging
from dataclasses import fields, is_dataclass
from enum import Enum
from itertools import count
from typing import Any, Dict, Optional

import numpy as np

from .braid_utils import BraidWord, TermSequence, render_braid_word
from .lab_config import OUTPUT_JSON
from .lab_results import Exhausted, Undefined
from .order_utils import DivisionTree, Move
from .term_utils import Term, render_term

logger = logging.getLogger(__name__)

STATUS_DECIDED = 0
STATUS_ERROR = 1
STATUS_OPEN = 2

# verdicts that leave the question open
OPEN_VERDICTS = ("exhausted", "undefined")

#--------------------------------------------------------------------------
# Jobs

class LxJob(dict):
    """
    One request for an action: the action id plus the parsed command line
    values, which read as attributes too (job.n is job["n"]).

    action_id and job_id live on the instance; every other attribute is a
    parameter. Ids are handed out in creation order across the process.
    """

    _ids = count(1)
    _OWN = frozenset(("action_id", "job_id"))

    def __init__(self, action_id: str, params: Optional[Dict[str, Any]] = None) -> None:
        super().__init__(params or {})
        object.__setattr__(self, "action_id", action_id)
        object.__setattr__(self, "job_id", next(LxJob._ids))

    def __getattr__(self, name: str) -> Any:
        try:
            return self[name]
        except KeyError:
            raise AttributeError(f"job {self.action_id} has no parameter {name!r}") from None

    def __setattr__(self, name: str, value: Any) -> None:
        if name in LxJob._OWN:
            object.__setattr__(self, name, value)
        else:
            self[name] = value

#--------------------------------------------------------------------------
# JSON conversion of results

def to_jsonable(value: Any) -> Any:
    """Terms and braid words become their text form; containers recurse."""
    if value is None or isinstance(value, (bool, int, float, str)):
        return value
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Term):
        return render_term(value)
    if isinstance(value, BraidWord):
        return render_braid_word(value)
    if isinstance(value, TermSequence):
        return [render_term(t) for t in value.trimmed()]
    if isinstance(value, Enum):
        return str(value)
    if isinstance(value, Move):
        return {"kind": value.kind, "factor": value.factor, "path": list(value.path)}
    if isinstance(value, DivisionTree):
        return {"label": render_term(value.label), "last_op": value.last_op,
                "children": [to_jsonable(child) for child in value.children]}
    if is_dataclass(value):
        return {f.name: to_jsonable(getattr(value, f.name)) for f in fields(value)}
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        return [to_jsonable(v) for v in value]
    return str(value)

def verdict_status(verdict: str) -> int:
    return STATUS_OPEN if verdict in OPEN_VERDICTS else STATUS_DECIDED

def search_limits(job: LxJob) -> Dict[str, Any]:
    """Keyword arguments shared by every search in order_utils and braid_utils."""
    config = job.config
    return {"fuel": config.fuel, "tables": job.tables,
            "max_level": config.equiv_max_k, "size_cap": config.size_cap}

#--------------------------------------------------------------------------
# Base action class
#
# Sub-class this class to create an action

class LxAction(object):

    def __init__(self, action_id: str, name: str = "") -> None:
        object.__init__(self)
        self.action_id = action_id
        self.name = name

    # base run job with variable number of arguments
    def run_job(self, job: LxJob, **kwargs) -> int:
        return STATUS_ERROR

    def report(self, job: LxJob, verdict: Any, text: str, certificate: Any = None,
               witness_level: Optional[int] = None, timings: Optional[Dict[str, float]] = None,
               status: Optional[int] = None) -> int:
        """Print one result in the job's output style and return its exit status."""
        verdict = str(verdict)
        if job.get("output") == OUTPUT_JSON:
            record = {
                "verdict": verdict,
                "certificate": to_jsonable(certificate),
                "witness_level": witness_level,
                "timings": timings or {},
            }
            print(json.dumps(record, ensure_ascii=False))
        else:
            print(text)
        logger.debug("%s finished with verdict %s", self.action_id, verdict)
        return verdict_status(verdict) if status is None else status

    def report_open(self, job: LxJob, outcome: Any, timings: Optional[Dict[str, float]] = None) -> int:
        """Exhausted and Undefined outcomes share one layout."""
        if isinstance(outcome, Exhausted):
            detail = f"exhausted ({outcome.operation}"
            if outcome.spent:
                detail += ", " + ", ".join(f"{k} {v}" for k, v in sorted(outcome.spent.items()))
            detail += ")"
            if outcome.reason:
                detail += f": {outcome.reason}"
        elif isinstance(outcome, Undefined):
            detail = f"undefined: {outcome.reason}" if outcome.reason else "undefined"
        else:
            raise TypeError(f"not an open outcome: {outcome!r}")
        return self.report(job, outcome, detail, certificate=outcome, timings=timings)
