import io
import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from LD_Algebra_Lab.lab_errors import (CorruptTableError, IndexRangeError, LevelOrderError, PreconditionError,
                                       ResourceCapError, TableFileError, UnassignedGeneratorError,
                                       VersionUnsupportedError)
from LD_Algebra_Lab.laver_utils import (MAGIC, MODE_SAMPLE, TableCache, apply_idx, build_table, check_invariants,
                                        compose_idx, eval_term, export_csv, load_table, period_lifting_violations,
                                        project, row_period, save_table, table_from_bytes, table_to_bytes,
                                        verify_laws, verify_projection)
from LD_Algebra_Lab.term_utils import parse_term
from tests.conftest import brute_force_table
from tests.strategies import indices


class TestBuild:
    def test_level_three_rows(self, tables):
        t = tables.get(3)
        assert t.row(4) == (5, 6, 7, 0)
        assert t.row(1) == (2, 4, 6, 0)
        assert apply_idx(t, 1, 3) == 6
        assert row_period(t, 6) == 2
        assert row_period(t, 1) == 4
        assert row_period(t, 7) == 1

    def test_identity_and_last_rows(self, tables):
        t = tables.get(4)
        assert all(apply_idx(t, 0, n) == n for n in range(16))
        assert all(apply_idx(t, 15, n) == 0 for n in range(16))

    @pytest.mark.parametrize("k", range(1, 7))
    def test_matches_the_recursion(self, tables, k):
        t = tables.get(k)
        grid = brute_force_table(k)
        assert all(apply_idx(t, m, n) == grid[m][n] for m in range(t.size) for n in range(t.size))

    @pytest.mark.slow
    @pytest.mark.parametrize("k", (7, 8))
    def test_matches_the_recursion_larger(self, tables, k):
        t = tables.get(k)
        r = np.arange(t.size)
        m, n = np.meshgrid(r, r, indexing="ij")
        assert np.array_equal(t.apply_many(m, n), np.asarray(brute_force_table(k)))

    def test_level_limits(self):
        with pytest.raises(ResourceCapError):
            build_table(0)
        with pytest.raises(ResourceCapError):
            build_table(25)
        with pytest.raises(ResourceCapError):
            build_table(12, memory_cap_bytes=1024)

    def test_out_of_range_indices(self, tables):
        with pytest.raises(IndexRangeError):
            apply_idx(tables.get(2), 4, 0)
        with pytest.raises(IndexRangeError):
            tables.get(2).period(-1)

    @pytest.mark.parametrize("k", range(1, 9))
    def test_row_invariants(self, tables, k):
        assert check_invariants(tables.get(k)) == []

    @pytest.mark.parametrize("k", range(1, 8))
    def test_periods_double_or_stay(self, tables, k):
        assert period_lifting_violations(tables.get(k), tables.get(k + 1)) == []


class TestCompose:
    def test_small_values(self, tables):
        t = tables.get(2)
        assert compose_idx(t, 1, 1) == 3
        assert compose_idx(t, 2, 3) == 3

    @given(st.data())
    def test_compose_then_apply(self, tables, data):
        # (a∘b)∗c = a∗(b∗c)
        t = tables.get(5)
        a, b, c = (data.draw(indices(5)) for _ in range(3))
        assert apply_idx(t, compose_idx(t, a, b), c) == apply_idx(t, a, apply_idx(t, b, c))


class TestLaws:
    @pytest.mark.parametrize("k", range(1, 7))
    def test_exhaustive(self, tables, k):
        report = verify_laws(tables.get(k))
        assert report.ok, report.violations
        assert report.triples_checked == (1 << k) ** 3

    def test_sampled(self, tables):
        report = verify_laws(tables.get(10), MODE_SAMPLE, sample_size=20_000, seed=7)
        assert report.ok
        assert report.triples_checked == 20_000

    def test_exhaustive_is_capped(self, tables):
        with pytest.raises(PreconditionError):
            verify_laws(tables.get(7))

    def test_projection(self, tables):
        for high in range(2, 7):
            for low in range(1, high):
                assert verify_projection(tables.get(high), tables.get(low)).ok

    def test_projection_needs_descending_levels(self, tables):
        with pytest.raises(LevelOrderError):
            verify_projection(tables.get(2), tables.get(3))

    def test_project(self):
        assert project(13, 4, 2) == 1
        with pytest.raises(LevelOrderError):
            project(1, 2, 3)


class TestEval:
    def test_default_assignment(self, tables):
        assert eval_term(tables.get(2), parse_term("((xx)x)(xx)")) == 0
        assert eval_term(tables.get(3), parse_term("x(xx)")) == 4

    def test_two_generators(self, tables):
        assert eval_term(tables.get(3), parse_term("(xy)x"), {0: 1, 1: 2}) == 5

    def test_compose_nodes(self, tables):
        t = tables.get(3)
        assert eval_term(t, parse_term("x o x")) == compose_idx(t, 1, 1)

    def test_indices_reduce_mod_size(self, tables):
        t = tables.get(2)
        assert eval_term(t, parse_term("xx"), {0: 5}) == eval_term(t, parse_term("xx"), {0: 1})

    def test_unassigned_generator(self, tables):
        with pytest.raises(UnassignedGeneratorError):
            eval_term(tables.get(2), parse_term("xy"))


class TestFiles:
    @pytest.mark.parametrize("k", range(1, 11))
    def test_round_trip_is_bit_exact(self, tables, k):
        data = table_to_bytes(tables.get(k))
        assert data[:4] == MAGIC
        again = table_from_bytes(data)
        assert again == tables.get(k)
        assert table_to_bytes(again) == data

    def test_every_single_byte_corruption_is_detected(self, tables):
        data = table_to_bytes(tables.get(3))
        for i in range(len(data)):
            corrupted = bytearray(data)
            corrupted[i] ^= 0x01
            with pytest.raises(CorruptTableError):
                table_from_bytes(bytes(corrupted))

    def test_future_version_is_rejected(self, tables):
        import zlib
        data = bytearray(table_to_bytes(tables.get(2)))
        data[4] = 2
        payload = bytes(data[4:-4])
        data[-4:] = (zlib.crc32(payload) & 0xffffffff).to_bytes(4, "little")
        with pytest.raises(VersionUnsupportedError):
            table_from_bytes(bytes(data))

    def test_truncated(self):
        with pytest.raises(CorruptTableError):
            table_from_bytes(b"LDT1")

    def test_save_and_load(self, tables, tmp_path):
        path = str(tmp_path / "a5.ldt")
        save_table(tables.get(5), path)
        assert load_table(path) == tables.get(5)
        assert not [name for name in os.listdir(tmp_path) if name.endswith(".tmp")]

    def test_csv(self, tables):
        stream = io.StringIO()
        export_csv(tables.get(2), stream)
        lines = stream.getvalue().splitlines()
        assert lines[0] == "m,n,value"
        assert len(lines) == 1 + 16
        assert "1,1,2" in lines

    def test_csv_is_capped(self, tables):
        with pytest.raises(ResourceCapError):
            export_csv(build_table(13), io.StringIO())


class TestCache:
    def test_disk_cache_is_reused(self, tmp_path):
        first = TableCache(str(tmp_path))
        table = first.get(6)
        assert os.path.exists(first.table_path(6))
        second = TableCache(str(tmp_path))
        assert second.is_cached(6)
        assert second.get(6) == table

    def test_corrupt_cache_file_is_rebuilt(self, tmp_path):
        cache = TableCache(str(tmp_path))
        path = cache.table_path(4)
        with open(path, "wb") as fp:
            fp.write(b"LDT1 garbage")
        assert TableCache(str(tmp_path)).get(4) == build_table(4)
        assert load_table(path) == build_table(4)

    def test_memory_only(self):
        cache = TableCache()
        assert not cache.is_cached(3)
        cache.get(3)
        assert cache.is_cached(3)
        with pytest.raises(PreconditionError):
            cache.table_path(3)

    def test_no_lock_file_left_behind(self, tmp_path):
        TableCache(str(tmp_path)).get(3)
        assert not [name for name in os.listdir(tmp_path) if name.endswith(".lock")]

    def test_lock_left_by_a_dead_process_is_broken(self, tmp_path, monkeypatch):
        monkeypatch.setattr("LD_Algebra_Lab.laver_utils.psutil.pid_exists", lambda pid: pid != 4_000_000)
        cache = TableCache(str(tmp_path), lock_timeout=30.0)
        with open(cache.table_path(3) + ".lock", "w") as fp:
            fp.write("4000000")
        assert cache.get(3) == build_table(3)
        assert sorted(os.listdir(tmp_path)) == [os.path.basename(cache.table_path(3))]

    def test_lock_held_by_a_live_process_is_waited_on(self, tmp_path):
        cache = TableCache(str(tmp_path), lock_timeout=0.2)
        with open(cache.table_path(3) + ".lock", "w") as fp:
            fp.write(str(os.getpid()))
        with pytest.raises(TableFileError):
            cache.get(3)
        assert os.path.exists(cache.table_path(3) + ".lock")
