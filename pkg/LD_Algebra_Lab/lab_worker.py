#-----------------------------------------------------------------------------
# lab_worker.py
#
# Part of the job dispatch system, which runs "jobs" in a background thread
# for the LD_Algebra_Lab package/application.
#
# The worker owns a background thread which waits for jobs passed in through
# a queue. Each job is sent to the registered "action" with the matching id.
#
# During job execution, output is relayed to the caller via a passed in
# callback function. Actions print their results, so stdout is captured and
# forwarded as TYPE_MESSAGE; stderr goes out as TYPE_ERROR. exit() calls and
# LabError exceptions are trapped, so the thread keeps running.
#
# pylint: disable=missing-docstring
#
#-----------------------------------------------------------------------------
import logging
import queue
from contextlib import redirect_stderr, redirect_stdout
from io import TextIOBase
from threading import Thread
from typing import Callable, Dict

from .lab_action import STATUS_ERROR, LxAction, LxJob
from .lab_errors import LabError

logger = logging.getLogger(__name__)

# seconds between shutdown checks while the queue is empty
_POLL_INTERVAL = 0.1

#--------------------------------------------------------------------------------------
# Output relay

class LxOutputRelay(TextIOBase):
    """
    Stands in for stdout or stderr while a job runs. Whatever an action
    prints is passed on unbuffered to one of the worker's callback
    channels, so a verdict reaches the caller as soon as it is printed.
    """

    def __init__(self, channel: Callable[[str], None]) -> None:
        super().__init__()
        self._channel = channel

    def writable(self) -> bool:
        return True

    def write(self, text: str) -> int:
        if text:
            self._channel(text)
        return len(text)

#--------------------------------------------------------------------------------------
# Worker thread to manage background jobs passed in via a queue

class LxWorker(object):

    TYPE_MESSAGE    = 1
    TYPE_FINISHED   = 2
    TYPE_PROGRESS   = 3
    TYPE_ERROR      = 4

    def __init__(self, cb_function: Callable[..., None]) -> None:

        object.__init__(self)

        # jobs reach the background thread only through this queue
        self._queue: "queue.Queue[LxJob]" = queue.Queue()

        self._cb_function = cb_function

        self._shutdown = False

        # registered actions, by action id
        self._actions: Dict[str, LxAction] = {}

        self._thread = Thread(target=self.process_loop, args=(self._queue,), daemon=True)
        self._thread.start()

    def __del__(self):

        self._shutdown = True

    def shutdown(self, wait: bool = True) -> None:

        self._shutdown = True
        if wait and self._thread.is_alive():
            self._thread.join()

    #------------------------------------------------------
    # Register action objects (LxAction) by their ids

    def add_action(self, *argv: LxAction) -> None:

        for action in argv:
            if not isinstance(action, LxAction):
                logger.warning("Parameter is not of type LxAction: %s", type(action))
                continue
            self._actions[action.action_id] = action

    def has_action(self, action_id: str) -> bool:
        return action_id in self._actions

    #------------------------------------------------------
    # Add a job for execution by the background thread.

    def add_job(self, the_job: LxJob) -> int:

        self._queue.put(the_job)

        return the_job.job_id

    #------------------------------------------------------
    # output relays - called from the IO wedges and the actions

    def message(self, message: str) -> None:

        self._cb_function(self.TYPE_MESSAGE, message)

    def error(self, message: str) -> None:

        self._cb_function(self.TYPE_ERROR, message)

    def progress(self, amount: int) -> None:
        self._cb_function(self.TYPE_PROGRESS, amount)

    #------------------------------------------------------
    # Job dispatcher. Job should be an LxJob object instance.
    #
    # retval  0 = decided, 2 = exhausted or undefined, 1 = error

    def dispatch_job(self, job: LxJob) -> int:

        if not isinstance(job, LxJob):
            self.error("error: invalid job dispatched\n")
            return STATUS_ERROR

        if job.action_id not in self._actions:
            self.error(f"error: unknown job type {job.action_id}\n")
            return STATUS_ERROR

        action = self._actions[job.action_id]

        logger.debug("job %d: %s", job.job_id, action.name)
        for key in sorted(job.keys()):
            logger.debug("  %s:\t%s", key.capitalize(), job[key])

        # capture stdio and stderr outputs
        with redirect_stdout(LxOutputRelay(self.message)):
            with redirect_stderr(LxOutputRelay(self.error)):

                try:
                    return action.run_job(job, worker_cb=self.progress)
                except LabError as err:
                    logger.debug("job %d failed", job.job_id, exc_info=True)
                    self.error(f"error: {err}\n")
                except SystemExit as err:
                    # exit() inside an action ends the job, not the thread
                    if isinstance(err.code, int):
                        return err.code
                    if err.code:
                        self.error(f"{err.code}\n")

        return STATUS_ERROR

    #------------------------------------------------------
    # The thread processing loop

    def process_loop(self, input_queue: "queue.Queue[LxJob]") -> None:

        # Wait on jobs until shutdown is set

        while not self._shutdown:

            try:
                job = input_queue.get(timeout=_POLL_INTERVAL)
            except queue.Empty:
                continue

            try:
                status = self.dispatch_job(job)
            except Exception as err:  # pylint: disable=broad-except
                logger.exception("job %d crashed", job.job_id)
                self.error(f"error: internal failure: {err}\n")
                status = STATUS_ERROR

            # job is finished - pass status, action type and job id
            self._cb_function(self.TYPE_FINISHED, status, job.action_id, job.job_id)
