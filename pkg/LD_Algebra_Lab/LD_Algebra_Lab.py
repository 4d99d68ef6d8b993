"""
Command line front end for LD_Algebra_Lab.

The parsed command becomes an LxJob which a background LxWorker dispatches
to the registered action. Results come back through the worker callback and
are written to standard output; diagnostics go to standard error.

Exit status: 0 decided, 2 exhausted or undefined, 1 error (usage errors
included).
"""
import argparse
import logging
import sys
import threading
from contextlib import redirect_stdout
from typing import List, Optional, TextIO

from .lab_act_braid import LxBraidAct, LxBraidAlpha, LxBraidBracket, LxBraidClosure
from .lab_act_crit import LxCritCompare, LxCritF, LxCritIndex, LxCritKappa, LxCritMinK
from .lab_act_table import (LxBenchTable, LxTableBuild, LxTableExport, LxTableImport, LxTablePeriod,
                            LxTableShow, LxTableVerify)
from .lab_act_term import LxTermCompare, LxTermEquiv, LxTermEval, LxTermPrenormal, LxTermSigma, LxTermTree
from .lab_act_verify import LxVerifyAll
from .lab_action import STATUS_ERROR, LxJob
from .lab_checks import CHECKS
from .lab_config import (DEFAULT_EQUIV_MAX_K, DEFAULT_FUEL, DEFAULT_MAX_K, DEFAULT_SEED, DEFAULT_SIZE_CAP,
                         OUTPUT_JSON, OUTPUT_TEXT, Config, get_version, resolve_cache_dir)
from .lab_errors import LabError, UsageError
from .lab_worker import LxWorker
from .laver_utils import TableCache

_APP_NAME = "LD_Algebra_Lab"
_LOG_HANDLER = "ld-algebra-lab"

_APP_VERSION = get_version("_version.py")

logger = logging.getLogger(__name__)

# job parameters copied from the parsed arguments
_GLOBAL_OPTIONS = ("cache_dir", "no_cache", "max_k", "fuel", "json", "seed", "force", "equiv_max_k",
                   "size_cap", "verbose", "command", "subcommand", "action_id")


class _LabArgumentParser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage, which here means "exhausted"."""

    def error(self, message: str) -> None:
        raise UsageError(f"{self.prog}: {message}")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value

#--------------------------------------------------------------------------------------
# grammar

def _add_table_commands(commands) -> None:
    table = commands.add_parser("table", help="build, inspect and move Laver tables")
    sub = table.add_subparsers(dest="subcommand", metavar="SUBCOMMAND", parser_class=_LabArgumentParser)
    sub.required = True

    p = sub.add_parser("build", help="build A_K and store it in the cache")
    p.add_argument("k", type=_positive_int, metavar="K")
    p.set_defaults(action_id=LxTableBuild.ACTION_ID)

    p = sub.add_parser("show", help="print A_K as a grid or as stored rows")
    p.add_argument("k", type=_positive_int, metavar="K")
    p.add_argument("--csv", action="store_true", help="print every cell as CSV")
    p.set_defaults(action_id=LxTableShow.ACTION_ID)

    p = sub.add_parser("period", help="period of row M in A_K")
    p.add_argument("k", type=_positive_int, metavar="K")
    p.add_argument("m", type=int, metavar="M")
    p.set_defaults(action_id=LxTablePeriod.ACTION_ID)

    p = sub.add_parser("verify", help="check the laws, row invariants and projection for A_K")
    p.add_argument("k", type=_positive_int, metavar="K")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exhaustive", dest="mode", action="store_const", const="exhaustive",
                      help="every triple (K <= 6 unless --force)")
    mode.add_argument("--sample", type=_positive_int, metavar="N", help="N random triples")
    p.set_defaults(action_id=LxTableVerify.ACTION_ID)

    p = sub.add_parser("export", help="write A_K to PATH")
    p.add_argument("k", type=_positive_int, metavar="K")
    p.add_argument("path", metavar="PATH")
    p.add_argument("--csv", action="store_true", help="write CSV instead of the binary format")
    p.set_defaults(action_id=LxTableExport.ACTION_ID)

    p = sub.add_parser("import", help="read a binary table file into the cache")
    p.add_argument("path", metavar="PATH")
    p.set_defaults(action_id=LxTableImport.ACTION_ID)

def _add_term_commands(commands) -> None:
    term = commands.add_parser("term", help="evaluate, compare and decompose terms")
    sub = term.add_subparsers(dest="subcommand", metavar="SUBCOMMAND", parser_class=_LabArgumentParser)
    sub.required = True

    p = sub.add_parser("eval", help="residue of EXPR in A_K")
    p.add_argument("k", type=_positive_int, metavar="K")
    p.add_argument("expr", metavar="EXPR")
    p.add_argument("--assign", action="append", metavar="G=I", help="table index for a generator (x=1 default)")
    p.set_defaults(action_id=LxTermEval.ACTION_ID)

    p = sub.add_parser("equiv", help="decide EXPR1 ≡ EXPR2")
    p.add_argument("expr1", metavar="EXPR1")
    p.add_argument("expr2", metavar="EXPR2")
    p.set_defaults(action_id=LxTermEquiv.ACTION_ID)

    p = sub.add_parser("compare", help="decide EXPR1 against EXPR2 in the left-division order")
    p.add_argument("expr1", metavar="EXPR1")
    p.add_argument("expr2", metavar="EXPR2")
    p.add_argument("--lex", action="store_true", help="compare the x-division forms instead")
    p.add_argument("--show-certificate", dest="verbose_certificate", action="store_true",
                   help="print the division found")
    p.set_defaults(action_id=LxTermCompare.ACTION_ID)

    p = sub.add_parser("prenormal", help="the U-prenormal sequence equal to V")
    p.add_argument("u", metavar="U")
    p.add_argument("v", metavar="V")
    p.set_defaults(action_id=LxTermPrenormal.ACTION_ID)

    p = sub.add_parser("tree", help="the U-division tree of V")
    p.add_argument("u", metavar="U")
    p.add_argument("v", metavar="V")
    p.set_defaults(action_id=LxTermTree.ACTION_ID)

    p = sub.add_parser("sigma", help="the composition normal form of EXPR")
    p.add_argument("expr", metavar="EXPR")
    p.set_defaults(action_id=LxTermSigma.ACTION_ID)

def _add_crit_commands(commands) -> None:
    crit = commands.add_parser("crit", help="critical points through table residues")
    sub = crit.add_subparsers(dest="subcommand", metavar="SUBCOMMAND", parser_class=_LabArgumentParser)
    sub.required = True

    p = sub.add_parser("index", help="critical point index of EXPR")
    p.add_argument("expr", metavar="EXPR")
    p.set_defaults(action_id=LxCritIndex.ACTION_ID)

    p = sub.add_parser("compare", help="compare the critical points of two terms")
    p.add_argument("expr1", metavar="EXPR1")
    p.add_argument("expr2", metavar="EXPR2")
    p.set_defaults(action_id=LxCritCompare.ACTION_ID)

    p = sub.add_parser("kappa", help="index of κ_N")
    p.add_argument("n", type=int, metavar="N")
    p.set_defaults(action_id=LxCritKappa.ACTION_ID)

    p = sub.add_parser("f", help="number of critical points strictly between κ_N and κ_N+1")
    p.add_argument("n", type=int, metavar="N")
    p.add_argument("--witnesses", action="store_true", help="list terms reaching each critical point")
    p.add_argument("--max-size", type=_positive_int, metavar="S", help="largest witness term searched")
    p.set_defaults(action_id=LxCritF.ACTION_ID)

    p = sub.add_parser("mink", help="least level where 1 ∗ I is nonzero")
    p.add_argument("i", type=int, metavar="I")
    p.set_defaults(action_id=LxCritMinK.ACTION_ID)

def _add_braid_commands(commands) -> None:
    braid = commands.add_parser("braid", help="braid words, the bracket and the action on terms")
    sub = braid.add_subparsers(dest="subcommand", metavar="SUBCOMMAND", parser_class=_LabArgumentParser)
    sub.required = True

    p = sub.add_parser("alpha", help="braid word of an A-term")
    p.add_argument("expr", metavar="EXPR")
    p.add_argument("--base", metavar="WORD", help="word substituted for x (default ε)")
    p.set_defaults(action_id=LxBraidAlpha.ACTION_ID)

    p = sub.add_parser("act", help="apply WORD to the sequence TERMS, x, x, ...")
    p.add_argument("word", metavar="WORD")
    p.add_argument("terms", nargs="*", metavar="TERMS")
    p.set_defaults(action_id=LxBraidAct.ACTION_ID)

    p = sub.add_parser("bracket", help="W1[W2] = W1 s(W2) σ1 s(W1)^-1")
    p.add_argument("word1", metavar="W1")
    p.add_argument("word2", metavar="W2")
    p.set_defaults(action_id=LxBraidBracket.ACTION_ID)

    p = sub.add_parser("closure", help="bracket closure of WORD over term shapes up to DEPTH leaves")
    p.add_argument("word", metavar="WORD")
    p.add_argument("depth", type=_positive_int, metavar="DEPTH")
    p.set_defaults(action_id=LxBraidClosure.ACTION_ID)

def _add_bench_commands(commands) -> None:
    bench = commands.add_parser("bench", help="timings")
    sub = bench.add_subparsers(dest="subcommand", metavar="SUBCOMMAND", parser_class=_LabArgumentParser)
    sub.required = True

    p = sub.add_parser("table", help="time building A_K")
    p.add_argument("k", type=_positive_int, metavar="K")
    p.add_argument("--repeat", type=_positive_int, default=1, metavar="R")
    p.set_defaults(action_id=LxBenchTable.ACTION_ID)

def _add_verify_commands(commands) -> None:
    verify = commands.add_parser("verify", help="invariant suite")
    sub = verify.add_subparsers(dest="subcommand", metavar="SUBCOMMAND", parser_class=_LabArgumentParser)
    sub.required = True

    p = sub.add_parser("all", help="run every check")
    p.add_argument("--full", action="store_true", help="use the full acceptance sizes")
    p.add_argument("--threads", type=_positive_int, metavar="N", help="worker threads (default: physical cores)")
    p.add_argument("--check", dest="checks", action="append", choices=sorted(CHECKS), metavar="NAME",
                   help="run only this check; repeatable")
    p.set_defaults(action_id=LxVerifyAll.ACTION_ID)

def build_parser() -> argparse.ArgumentParser:
    parser = _LabArgumentParser(prog=_APP_NAME, description="Laver tables, LD terms and braid words.")
    parser.add_argument("--version", action="version", version=f"{_APP_NAME} {_APP_VERSION}")
    parser.add_argument("--cache-dir", metavar="DIR", help="table cache directory (default: $LDLAB_CACHE, "
                                                            "then the platform cache location)")
    parser.add_argument("--no-cache", action="store_true", help="keep tables in memory only")
    parser.add_argument("--max-k", type=int, default=DEFAULT_MAX_K, help="highest table level used for residues")
    parser.add_argument("--fuel", type=int, default=DEFAULT_FUEL, help="search states allowed per decision")
    parser.add_argument("--equiv-max-k", type=int, default=DEFAULT_EQUIV_MAX_K,
                        help="highest table level tried as an inequivalence witness")
    parser.add_argument("--size-cap", type=int, default=DEFAULT_SIZE_CAP, help="largest term size, in leaves")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED, help="seed for sampled checks")
    parser.add_argument("--json", action="store_true", help="print one JSON record per result")
    parser.add_argument("--force", action="store_true", help="allow levels above the usual limit")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug")

    commands = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_LabArgumentParser)
    commands.required = True
    _add_table_commands(commands)
    _add_term_commands(commands)
    _add_crit_commands(commands)
    _add_braid_commands(commands)
    _add_bench_commands(commands)
    _add_verify_commands(commands)
    return parser

#--------------------------------------------------------------------------------------

def _configure_logging(verbose: int, stream: TextIO) -> None:
    """Route the package's log records to this run's stream, replacing the previous run's handler."""
    level = logging.WARNING
    if verbose == 1:
        level = logging.INFO
    elif verbose > 1:
        level = logging.DEBUG
    package = logging.getLogger(_APP_NAME)
    for old in [h for h in package.handlers if h.get_name() == _LOG_HANDLER]:
        package.removeHandler(old)
    handler = logging.StreamHandler(stream)
    handler.set_name(_LOG_HANDLER)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    package.addHandler(handler)
    package.setLevel(level)

def config_from_args(args: argparse.Namespace) -> Config:
    return Config(cache_dir=resolve_cache_dir(args.cache_dir), max_k=args.max_k, fuel=args.fuel,
                  output=OUTPUT_JSON if args.json else OUTPUT_TEXT, seed=args.seed, force=args.force,
                  equiv_max_k=args.equiv_max_k, size_cap=args.size_cap).validate()


class LabConsole(object):
    """Owns the worker for one run and relays its callbacks to the output streams."""

    def __init__(self, stdout: TextIO, stderr: TextIO) -> None:
        self._stdout = stdout
        self._stderr = stderr
        self._finished = threading.Event()
        self.status = STATUS_ERROR

        self._worker = LxWorker(self.on_worker_callback)
        self._worker.add_action(LxTableBuild(), LxTableShow(), LxTablePeriod(), LxTableVerify(),
                                LxTableExport(), LxTableImport(), LxBenchTable(),
                                LxTermEval(), LxTermEquiv(), LxTermCompare(), LxTermPrenormal(),
                                LxTermTree(), LxTermSigma(),
                                LxCritIndex(), LxCritCompare(), LxCritKappa(), LxCritF(), LxCritMinK(),
                                LxBraidAlpha(), LxBraidAct(), LxBraidBracket(), LxBraidClosure(),
                                LxVerifyAll())

    def on_worker_callback(self, *args) -> None:

        # need a min of 2 args (type, arg)
        if len(args) < 2:
            self._stderr.write("Invalid parameters from the worker.\n")
            return

        msg_type = args[0]
        if msg_type == LxWorker.TYPE_MESSAGE:
            self._stdout.write(args[1])
        elif msg_type == LxWorker.TYPE_ERROR:
            self._stderr.write(args[1])
        elif msg_type == LxWorker.TYPE_PROGRESS:
            logger.info("progress %d%%", args[1])
        elif msg_type == LxWorker.TYPE_FINISHED:
            # finished takes 3 args - status, job type, and job id
            if len(args) < 4:
                self._stderr.write("Invalid parameters from the worker.\n")
                return
            self.on_finished(args[1], args[2], args[3])

    def on_finished(self, status: int, action_type: str, job_id: int) -> None:
        logger.debug("job %d (%s) finished with status %d", job_id, action_type, status)
        self.status = status
        self._finished.set()

    def run_job(self, job: LxJob) -> int:
        self._finished.clear()
        self._worker.add_job(job)
        self._finished.wait()
        return self.status

    def shutdown(self) -> None:
        self._worker.shutdown()


def run(argv: Optional[List[str]] = None, stdout: Optional[TextIO] = None,
        stderr: Optional[TextIO] = None) -> int:
    """Parse argv, run the command it names and return the exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = sys.argv[1:] if argv is None else list(argv)

    try:
        with redirect_stdout(stdout):
            args = build_parser().parse_args(argv)
        _configure_logging(args.verbose, stderr)
        config = config_from_args(args)
    except LabError as err:
        stderr.write(f"error: {err}\n")
        return STATUS_ERROR
    except SystemExit as err:
        # --help and --version
        return err.code if isinstance(err.code, int) else STATUS_ERROR

    tables = TableCache(cache_dir=None if args.no_cache else config.cache_dir,
                        max_level=config.table_level_cap, memory_cap_bytes=config.memory_cap_bytes)
    params = {key: value for key, value in vars(args).items() if key not in _GLOBAL_OPTIONS}
    params.update(config=config, tables=tables, output=config.output)
    job = LxJob(args.action_id, params)

    console = LabConsole(stdout, stderr)
    try:
        return console.run_job(job)
    finally:
        console.shutdown()

def startLabCLI() -> None:
    """Console script entry point."""
    sys.exit(run())


if __name__ == '__main__':
    startLabCLI()
