"""
The finite left distributive tables (2^k, ∗_k).

Carrier {0, ..., 2^k - 1} with

    m ∗ 0 = 0
    m ∗ 1 = m + 1 (mod 2^k)
    m ∗ i = (m ∗ (i-1)) ∗ (m ∗ 1)        1 < i < 2^k

Row 0 is the identity row (0 ∗ n = n) and row 2^k - 1 is constantly 0. This
is the classical Laver table A_k with 2^k renamed to 0. Every row m > 0 is
periodic: it climbs strictly until its first 0 at column p_m and then
repeats, so only one period per row is stored.

Composition on the table is m ∘ n = (m ∗ (n+1)) - 1 (mod 2^k), the unique
c with c ∗ 1 = m ∗ (n ∗ 1).

Binary file layout (all integers little endian):

    "LDT1" | version u8 (=1) | k u8 | for m = 1 .. 2^k-1: p_m u32, p_m values u32
    | CRC-32 u32 of every byte between the magic and the CRC
"""
from dataclasses import dataclass, field
from functools import cached_property
from time import perf_counter, sleep
from typing import Dict, Iterator, List, Optional, Tuple
import csv
import logging
import os
import threading
import zlib

import numpy as np
import psutil

from .lab_config import HARD_MAX_K, default_memory_cap
from .lab_errors import (CorruptTableError, IndexRangeError, LevelOrderError, PreconditionError,
                         ResourceCapError, TableFileError, UnassignedGeneratorError,
                         VersionUnsupportedError)
from .term_utils import APPLY, LEAF, Term

logger = logging.getLogger(__name__)

MAGIC = b"LDT1"
FORMAT_VERSION = 1

# exhaustive law checks walk 2^(3k) triples
EXHAUSTIVE_LEVEL_CAP = 6

# largest k that export_csv will write (2^(2k) lines)
CSV_LEVEL_CAP = 12

# rough CPython footprint used by the memory guard
_BYTES_PER_ROW = 120
_BYTES_PER_CELL = 36

LAW_LD = "ld"
LAW_COMPOSE_ASSOC = "compose-assoc"
LAW_COMPOSE_APPLY = "compose-apply"
LAW_APPLY_COMPOSE = "apply-compose"
LAW_COMPOSE_SWAP = "compose-swap"
LAW_PROJECT_APPLY = "project-apply"
LAW_PROJECT_COMPOSE = "project-compose"

SIGMA_LAWS = (LAW_COMPOSE_ASSOC, LAW_COMPOSE_APPLY, LAW_APPLY_COMPOSE, LAW_COMPOSE_SWAP)


class LaverTable:
    """An immutable (2^k, ∗_k) with one stored period per row."""

    def __init__(self, k: int, periods: List[int], offsets: List[int], values: List[int]) -> None:
        self._k = k
        self._size = 1 << k
        self._mask = self._size - 1
        self._periods = periods
        self._offsets = offsets
        self._values = values

    @property
    def k(self) -> int:
        return self._k

    @property
    def size(self) -> int:
        """Number of elements, 2^k."""
        return self._size

    @property
    def stored_cells(self) -> int:
        return len(self._values)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LaverTable):
            return NotImplemented
        return (self._k == other._k and self._periods == other._periods
                and self._values == other._values)

    def __hash__(self) -> int:
        return hash((self._k, len(self._values)))

    def __repr__(self) -> str:
        return f"LaverTable(k={self._k}, stored_cells={len(self._values)})"

    def check_index(self, i: int) -> None:
        if not 0 <= i < self._size:
            raise IndexRangeError(f"index {i} outside 0..{self._size - 1} at level {self._k}")

    def period(self, m: int) -> int:
        self.check_index(m)
        return self._periods[m]

    def row(self, m: int) -> Tuple[int, ...]:
        """m ∗ 1, ..., m ∗ p_m"""
        self.check_index(m)
        if m == 0:
            return tuple(range(1, self._size)) + (0,)
        start = self._offsets[m]
        return tuple(self._values[start:start + self._periods[m]])

    def rows(self) -> Iterator[Tuple[int, int, Tuple[int, ...]]]:
        """(m, p_m, stored values) for m = 1 .. 2^k - 1"""
        for m in range(1, self._size):
            yield m, self._periods[m], self.row(m)

    # unchecked scalar lookups, arguments already reduced mod 2^k
    def _apply(self, m: int, n: int) -> int:
        if m == 0:
            return n
        if n == 0:
            return 0
        return self._values[self._offsets[m] + ((n - 1) & (self._periods[m] - 1))]

    def _compose(self, m: int, n: int) -> int:
        return (self._apply(m, (n + 1) & self._mask) - 1) & self._mask

    @cached_property
    def _arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        periods = np.asarray(self._periods, dtype=np.int64)
        periods[0] = 1  # row 0 is answered by np.where below
        offsets = np.asarray(self._offsets, dtype=np.int64)
        values = np.asarray(self._values, dtype=np.int64)
        return periods, offsets, values

    def apply_many(self, m: np.ndarray, n: np.ndarray) -> np.ndarray:
        """Elementwise m ∗ n for index arrays."""
        periods, offsets, values = self._arrays
        m = np.asarray(m, dtype=np.int64)
        n = np.asarray(n, dtype=np.int64)
        picked = values[offsets[m] + ((n - 1) & (periods[m] - 1))]
        picked = np.where(n == 0, 0, picked)
        return np.where(m == 0, n, picked)

    def compose_many(self, m: np.ndarray, n: np.ndarray) -> np.ndarray:
        n = np.asarray(n, dtype=np.int64)
        return (self.apply_many(m, (n + 1) & self._mask) - 1) & self._mask


def _estimated_bytes(rows: int, cells: int) -> int:
    return rows * _BYTES_PER_ROW + cells * _BYTES_PER_CELL

def build_table(k: int, max_level: int = HARD_MAX_K,
                memory_cap_bytes: Optional[int] = None) -> LaverTable:
    """
    Rows are filled from 2^k - 1 down to 1. Row m only reads rows with a
    larger index (every entry of row m is 0 or > m) and the identity row.
    """
    if not 1 <= k <= max_level:
        raise ResourceCapError(f"level {k} outside 1..{max_level}")
    if memory_cap_bytes is None:
        memory_cap_bytes = default_memory_cap()

    size = 1 << k
    if _estimated_bytes(size, size) > memory_cap_bytes:
        raise ResourceCapError(f"level {k} needs more than the {memory_cap_bytes} byte memory cap")

    start = perf_counter()
    rows: List[Optional[List[int]]] = [None] * size
    rows[size - 1] = [0]
    cells = 1

    for m in range(size - 2, 0, -1):
        successor = m + 1
        row = [successor]
        value = successor
        while value != 0:
            source = rows[value]
            if source is None:
                raise RuntimeError(f"row {m} read undefined row {value} at level {k}")
            value = source[(successor - 1) % len(source)]
            if value != 0 and value <= m:
                raise RuntimeError(f"row {m} produced {value} <= {m} at level {k}")
            row.append(value)
        rows[m] = row
        cells += len(row)

        if m & 0xfff == 0 and _estimated_bytes(size, cells) > memory_cap_bytes:
            raise ResourceCapError(f"level {k} exceeded the {memory_cap_bytes} byte memory cap")

    periods = [size]
    offsets = [0]
    values: List[int] = []
    for m in range(1, size):
        offsets.append(len(values))
        periods.append(len(rows[m]))
        values.extend(rows[m])

    logger.info("built level %d: %d rows, %d stored cells in %.3fs",
                k, size - 1, len(values), perf_counter() - start)
    return LaverTable(k, periods, offsets, values)

#--------------------------------------------------------------------------------------
# element operations

def apply_idx(t: LaverTable, m: int, n: int) -> int:
    t.check_index(m)
    t.check_index(n)
    return t._apply(m, n)

def compose_idx(t: LaverTable, m: int, n: int) -> int:
    t.check_index(m)
    t.check_index(n)
    return t._compose(m, n)

def row_period(t: LaverTable, m: int) -> int:
    return t.period(m)

def project(i: int, from_k: int, to_k: int) -> int:
    """π: level from_k -> level to_k, i.e. i mod 2^to_k"""
    if to_k > from_k:
        raise LevelOrderError(f"cannot project from level {from_k} up to level {to_k}")
    if to_k < 0:
        raise LevelOrderError("levels are non-negative")
    if not 0 <= i < (1 << from_k):
        raise IndexRangeError(f"index {i} outside level {from_k}")
    return i & ((1 << to_k) - 1)

def eval_term(t: LaverTable, w: Term, assignment: Optional[Dict[int, int]] = None) -> int:
    """
    Evaluate w bottom up, compose nodes through compose_idx. Assigned
    indices are reduced mod 2^k. The default assignment is x -> 1.
    """
    if assignment is None:
        assignment = {0: 1}
    mask = t.size - 1
    memo: Dict[int, int] = {}
    pending: List[Tuple[Term, bool]] = [(w, False)]
    while pending:
        node, ready = pending.pop()
        key = id(node)
        if key in memo:
            continue
        if node.kind == LEAF:
            if node.var not in assignment:
                raise UnassignedGeneratorError(node.var)
            index = assignment[node.var]
            if index < 0:
                raise IndexRangeError(f"negative index {index} for generator {node.var}")
            memo[key] = index & mask
        elif ready:
            a = memo[id(node.left)]
            b = memo[id(node.right)]
            memo[key] = t._apply(a, b) if node.kind == APPLY else t._compose(a, b)
        else:
            pending.append((node, True))
            pending.append((node.right, False))
            pending.append((node.left, False))
    return memo[id(w)]

#--------------------------------------------------------------------------------------
# law and invariant checks

MODE_EXHAUSTIVE = "exhaustive"
MODE_SAMPLE = "sample"

# violations kept verbatim in a report; the count is always complete
_REPORTED_VIOLATIONS = 20


@dataclass(frozen=True)
class LawViolation:
    law: str
    a: int
    b: int
    c: int


@dataclass
class LawReport:
    level: int
    mode: str
    triples_checked: int = 0
    laws: Tuple[str, ...] = ()
    violation_count: int = 0
    violations: List[LawViolation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.violation_count == 0

    def record(self, law: str, a: np.ndarray, b: np.ndarray, c: np.ndarray, bad: np.ndarray) -> None:
        where = np.flatnonzero(bad)
        self.violation_count += int(where.size)
        room = _REPORTED_VIOLATIONS - len(self.violations)
        for i in where[:max(room, 0)]:
            self.violations.append(LawViolation(law, int(a[i]), int(b[i]), int(c[i])))

def _triples(size: int, mode: str, sample_size: int, seed: int,
             level: int, allow_large: bool) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    if mode == MODE_EXHAUSTIVE:
        if level > EXHAUSTIVE_LEVEL_CAP and not allow_large:
            raise PreconditionError(f"exhaustive checks are limited to k <= {EXHAUSTIVE_LEVEL_CAP}")
        r = np.arange(size, dtype=np.int64)
        a, b, c = np.meshgrid(r, r, r, indexing="ij")
        return a.ravel(), b.ravel(), c.ravel()
    if mode == MODE_SAMPLE:
        rng = np.random.default_rng(seed)
        drawn = rng.integers(0, size, size=(3, sample_size), dtype=np.int64)
        return drawn[0], drawn[1], drawn[2]
    raise ValueError(f"unknown verification mode {mode!r}")

def verify_laws(t: LaverTable, mode: str = MODE_EXHAUSTIVE, sample_size: int = 100_000,
                seed: int = 1, allow_large: bool = False) -> LawReport:
    """Left distributivity of ∗ and the four Σ laws for (∗, ∘) over triples."""
    a, b, c = _triples(t.size, mode, sample_size, seed, t.k, allow_large)
    ap, co = t.apply_many, t.compose_many
    report = LawReport(level=t.k, mode=mode, triples_checked=int(a.size),
                       laws=(LAW_LD,) + SIGMA_LAWS)

    ab = ap(a, b)
    report.record(LAW_LD, a, b, c, ap(a, ap(b, c)) != ap(ab, ap(a, c)))
    report.record(LAW_COMPOSE_ASSOC, a, b, c, co(co(a, b), c) != co(a, co(b, c)))
    report.record(LAW_COMPOSE_APPLY, a, b, c, ap(co(a, b), c) != ap(a, ap(b, c)))
    report.record(LAW_APPLY_COMPOSE, a, b, c, ap(a, co(b, c)) != co(ab, ap(a, c)))
    report.record(LAW_COMPOSE_SWAP, a, b, c, co(a, b) != co(ab, a))

    logger.debug("verify_laws level %d (%s): %d triples, %d violations",
                 t.k, mode, report.triples_checked, report.violation_count)
    return report

def verify_projection(high: LaverTable, low: LaverTable, mode: str = MODE_EXHAUSTIVE,
                      sample_size: int = 100_000, seed: int = 1,
                      allow_large: bool = False) -> LawReport:
    """π(a ∗ b) = π(a) ∗ π(b) and π(a ∘ b) = π(a) ∘ π(b) from high.k down to low.k."""
    if low.k > high.k:
        raise LevelOrderError(f"cannot project from level {high.k} up to level {low.k}")
    if mode == MODE_EXHAUSTIVE:
        if high.k > EXHAUSTIVE_LEVEL_CAP and not allow_large:
            raise PreconditionError(f"exhaustive checks are limited to k <= {EXHAUSTIVE_LEVEL_CAP}")
        r = np.arange(high.size, dtype=np.int64)
        a, b = (grid.ravel() for grid in np.meshgrid(r, r, indexing="ij"))
    else:
        rng = np.random.default_rng(seed)
        a, b = rng.integers(0, high.size, size=(2, sample_size), dtype=np.int64)

    mask = low.size - 1
    report = LawReport(level=high.k, mode=mode, triples_checked=int(a.size),
                       laws=(LAW_PROJECT_APPLY, LAW_PROJECT_COMPOSE))
    zeros = np.zeros_like(a)
    pa, pb = a & mask, b & mask
    report.record(LAW_PROJECT_APPLY, a, b, zeros,
                  (high.apply_many(a, b) & mask) != low.apply_many(pa, pb))
    report.record(LAW_PROJECT_COMPOSE, a, b, zeros,
                  (high.compose_many(a, b) & mask) != low.compose_many(pa, pb))
    return report

def check_invariants(t: LaverTable) -> List[str]:
    """Stored-row invariants; an empty list means the table is well formed."""
    problems = []
    for m, period, row in t.rows():
        if period & (period - 1) or t.size % period:
            problems.append(f"row {m}: period {period} is not a power of two dividing {t.size}")
        if row[0] != (m + 1) & (t.size - 1):
            problems.append(f"row {m}: m * 1 = {row[0]}")
        if row[-1] != 0:
            problems.append(f"row {m}: period does not end in 0")
        for value in row[:-1]:
            if not m < value < t.size:
                problems.append(f"row {m}: value {value} is neither 0 nor > m")
                break
    return problems

def period_lifting_violations(low: LaverTable, high: LaverTable) -> List[Tuple[int, int, int]]:
    """(m, period at high.k, period of m mod 2^low.k) wherever the high period is not p or 2p."""
    if high.k != low.k + 1:
        raise LevelOrderError("period lifting compares consecutive levels")
    out = []
    for m in range(high.size):
        below = low.period(m & (low.size - 1))
        above = high.period(m)
        if above not in (below, 2 * below):
            out.append((m, above, below))
    return out

#--------------------------------------------------------------------------------------
# file formats

def table_to_bytes(t: LaverTable) -> bytes:
    _, offsets, values = t._arrays
    periods = np.asarray(t._periods[1:], dtype=np.int64)
    body = np.insert(values, offsets[1:], periods)
    payload = bytes([FORMAT_VERSION, t.k]) + body.astype("<u4").tobytes()
    crc = zlib.crc32(payload) & 0xffffffff
    return MAGIC + payload + crc.to_bytes(4, "little")

def table_from_bytes(data: bytes) -> LaverTable:
    if len(data) < len(MAGIC) + 2 + 4:
        raise CorruptTableError("table file is truncated")
    if data[:len(MAGIC)] != MAGIC:
        raise CorruptTableError("bad magic bytes")
    payload = data[len(MAGIC):-4]
    stored_crc = int.from_bytes(data[-4:], "little")
    if zlib.crc32(payload) & 0xffffffff != stored_crc:
        raise CorruptTableError("CRC mismatch")
    if payload[0] != FORMAT_VERSION:
        raise VersionUnsupportedError(f"table format version {payload[0]} is not supported")
    k = payload[1]
    if not 1 <= k <= 31:
        raise CorruptTableError(f"bad level {k}")
    body = payload[2:]
    if len(body) % 4:
        raise CorruptTableError("payload is not a whole number of 32-bit words")

    words = np.frombuffer(body, dtype="<u4")
    size = 1 << k
    periods = [size]
    offsets = [0]
    values: List[int] = []
    pos = 0
    for m in range(1, size):
        if pos >= len(words):
            raise CorruptTableError(f"table ends before row {m}")
        period = int(words[pos])
        pos += 1
        if period < 1 or period & (period - 1) or period > size or pos + period > len(words):
            raise CorruptTableError(f"row {m} has bad period {period}")
        row = words[pos:pos + period].tolist()
        pos += period
        if row[0] != (m + 1) % size or row[-1] != 0 or any(not m < v < size for v in row[:-1]):
            raise CorruptTableError(f"row {m} violates the row invariants")
        offsets.append(len(values))
        periods.append(period)
        values.extend(row)
    if pos != len(words):
        raise CorruptTableError("trailing data after the last row")
    return LaverTable(k, periods, offsets, values)

def save_table(t: LaverTable, path: str) -> None:
    """Written to a temporary name and moved into place so readers never see half a file."""
    temp_path = f"{path}.{os.getpid()}.{threading.get_ident()}.tmp"
    try:
        with open(temp_path, "wb") as fp:
            fp.write(table_to_bytes(t))
        os.replace(temp_path, path)
    except OSError as error:
        raise TableFileError(f"cannot write {path}: {error}") from error
    finally:
        if os.path.exists(temp_path):
            os.remove(temp_path)

def load_table(path: str) -> LaverTable:
    try:
        with open(path, "rb") as fp:
            data = fp.read()
    except OSError as error:
        raise TableFileError(f"cannot read {path}: {error}") from error
    return table_from_bytes(data)

def export_csv(t: LaverTable, stream) -> None:
    """Header "m,n,value" then every m ∗ n; stream is any text file object."""
    if t.k > CSV_LEVEL_CAP:
        raise ResourceCapError(f"CSV export is limited to k <= {CSV_LEVEL_CAP}")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["m", "n", "value"])
    for m in range(t.size):
        for n in range(t.size):
            writer.writerow([m, n, t._apply(m, n)])

#--------------------------------------------------------------------------------------
# cache

class _ExclusiveLockFile(object):
    """
    Cross-process writer lock: whoever creates the file owns it. The file
    holds the owner's pid; a lock whose owner is no longer running is
    broken instead of waited out.
    """

    def __init__(self, path: str, timeout: float) -> None:
        self.path = path
        self.timeout = timeout
        self._fd = None

    def _holder(self, path: str) -> Optional[int]:
        try:
            with open(path, "rb") as f:
                text = f.read().decode("ascii", "replace").strip()
        except FileNotFoundError:
            return None
        # empty while the owner is still writing its pid
        return int(text) if text.isdigit() else None

    def _break_if_stale(self) -> None:
        pid = self._holder(self.path)
        if pid is None or psutil.pid_exists(pid):
            return
        # only one waiter wins the rename; the loser finds the file gone
        stale = f"{self.path}.{os.getpid()}.{threading.get_ident()}.stale"
        try:
            os.rename(self.path, stale)
        except FileNotFoundError:
            return
        if self._holder(stale) != pid:
            # a live owner took the lock between the read and the rename: give it back
            try:
                os.link(stale, self.path)
            except FileExistsError:
                logger.warning("lock %s changed hands while being broken", self.path)
        else:
            logger.warning("breaking lock %s left by process %d", self.path, pid)
        os.remove(stale)

    def __enter__(self) -> "_ExclusiveLockFile":
        deadline = perf_counter() + self.timeout
        while True:
            try:
                self._fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
                os.write(self._fd, str(os.getpid()).encode())
                return self
            except FileExistsError:
                self._break_if_stale()
                if perf_counter() > deadline:
                    raise TableFileError(f"timed out waiting for lock {self.path}")
                sleep(0.05)

    def __exit__(self, *exc) -> None:
        os.close(self._fd)
        os.remove(self.path)


class TableCache(object):
    """
    Tables by level, kept in memory and, when a directory is given, on disk.
    Completed tables are immutable so they are shared freely between threads.
    """

    def __init__(self, cache_dir: Optional[str] = None, max_level: int = HARD_MAX_K,
                 memory_cap_bytes: Optional[int] = None, lock_timeout: float = 120.0) -> None:
        self.cache_dir = cache_dir
        self.max_level = max_level
        self.memory_cap_bytes = memory_cap_bytes
        self.lock_timeout = lock_timeout
        self._tables: Dict[int, LaverTable] = {}
        self._lock = threading.Lock()

    def table_path(self, k: int) -> str:
        if self.cache_dir is None:
            raise PreconditionError("this cache has no directory")
        return os.path.join(self.cache_dir, f"laver_k{k:02d}.ldt")

    def get(self, k: int) -> LaverTable:
        with self._lock:
            table = self._tables.get(k)
            if table is None:
                table = self._load_or_build(k)
                self._tables[k] = table
            return table

    def put(self, table: LaverTable) -> None:
        with self._lock:
            self._tables[table.k] = table
            if self.cache_dir is not None:
                self._store(table)

    def is_cached(self, k: int) -> bool:
        if k in self._tables:
            return True
        return self.cache_dir is not None and os.path.exists(self.table_path(k))

    def _load_or_build(self, k: int) -> LaverTable:
        if self.cache_dir is not None:
            path = self.table_path(k)
            if os.path.exists(path):
                try:
                    table = load_table(path)
                    if table.k == k:
                        logger.info("cache hit for level %d at %s", k, path)
                        return table
                    logger.warning("cache file %s holds level %d, rebuilding", path, table.k)
                except TableFileError as error:
                    logger.warning("discarding unreadable cache file %s: %s", path, error)

        table = build_table(k, self.max_level, self.memory_cap_bytes)
        if self.cache_dir is not None:
            self._store(table)
        return table

    def _store(self, table: LaverTable) -> None:
        os.makedirs(self.cache_dir, exist_ok=True)
        path = self.table_path(table.k)
        with _ExclusiveLockFile(path + ".lock", self.lock_timeout):
            save_table(table, path)


_default_cache = TableCache()

def default_cache() -> TableCache:
    """Process wide in-memory cache used when callers do not pass one."""
    return _default_cache
