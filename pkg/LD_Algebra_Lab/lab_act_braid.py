#-----------------------------------------------------------------------------
# lab_act_braid.py
#
# Actions for the "braid" command: the word encoding of an A-term, the
# bracket of two words and the action of a word on a sequence of terms.
#
# pylint: disable=missing-docstring
#
#-----------------------------------------------------------------------------
from time import perf_counter

from .braid_utils import (EMPTY, TermSequence, act, alpha_of, bracket, closure_sample, parse_braid_word,
                          render_braid_word)
from .lab_action import LxAction, LxJob, search_limits
from .lab_results import Exhausted, Undefined
from .term_utils import parse_term, render_term

#--------------------------------------------------------------------------------------

class LxBraidAlpha(LxAction):

    ACTION_ID = "braid-alpha"
    NAME = "Braid Word of a Term"

    def __init__(self) -> None:
        super().__init__(self.ACTION_ID, self.NAME)

    def run_job(self, job: LxJob, **kwargs) -> int:

        base = parse_braid_word(job.base) if job.get("base") else EMPTY
        word = alpha_of(parse_term(job.expr), base)
        return self.report(job, "decided", render_braid_word(word),
                           certificate={"word": word, "length": len(word)})


class LxBraidAct(LxAction):

    ACTION_ID = "braid-act"
    NAME = "Braid Action on Terms"

    def __init__(self) -> None:
        super().__init__(self.ACTION_ID, self.NAME)

    def run_job(self, job: LxJob, **kwargs) -> int:

        word = parse_braid_word(job.word)
        sequence = TermSequence(tuple(parse_term(t) for t in job.get("terms") or ()))

        start = perf_counter()
        found = act(word, sequence, **search_limits(job))
        timings = {"act": round(perf_counter() - start, 6)}

        if isinstance(found, (Exhausted, Undefined)):
            return self.report_open(job, found, timings)
        return self.report(job, "decided", str(found), certificate=found, timings=timings)


class LxBraidBracket(LxAction):

    ACTION_ID = "braid-bracket"
    NAME = "Braid Bracket"

    def __init__(self) -> None:
        super().__init__(self.ACTION_ID, self.NAME)

    def run_job(self, job: LxJob, **kwargs) -> int:

        word = bracket(parse_braid_word(job.word1), parse_braid_word(job.word2))
        return self.report(job, "decided", render_braid_word(word), certificate={"word": word})


class LxBraidClosure(LxAction):

    ACTION_ID = "braid-closure"
    NAME = "Bracket Closure Sample"

    def __init__(self) -> None:
        super().__init__(self.ACTION_ID, self.NAME)

    def run_job(self, job: LxJob, **kwargs) -> int:

        sample = closure_sample(parse_braid_word(job.word), job.depth)
        lines = [f"{render_term(shape)}\t{render_braid_word(word)}" for shape, word in sample]
        certificate = [{"shape": shape, "word": word} for shape, word in sample]
        return self.report(job, "decided", "\n".join(lines), certificate=certificate)
