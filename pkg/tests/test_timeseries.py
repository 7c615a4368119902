import numpy as np
import pytest

from causalstream.errors import (
    EmptyFile,
    MissingColumn,
    NonNumericCell,
    ShapeMismatch,
    TooFewSamples,
)
from causalstream.timeseries import (
    TimeWindow,
    VariableSet,
    append,
    ingest,
    save_trace,
    slice_window,
    standardize,
)

XY = VariableSet(("x", "y"))


def make_window(rows, capacity=None, **kwargs):
    return TimeWindow(XY, np.asarray(rows, dtype=float), capacity=capacity, **kwargs)


class TestVariableSet:
    def test_requires_two_unique_names(self):
        with pytest.raises(ValueError):
            VariableSet(("x",))
        with pytest.raises(ValueError):
            VariableSet(("x", "x"))
        with pytest.raises(ValueError):
            VariableSet(("x", ""))

    def test_index_lookup(self):
        vs = VariableSet(("a", "b", "c"))
        assert vs.count == 3
        assert vs.index("b") == 1
        with pytest.raises(KeyError):
            vs.index("missing")


class TestIngest:
    def test_csv_basic(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("x,y\n1,2\n3,4\n")
        window = ingest(path, XY)
        assert len(window) == 2
        assert window.n_vars == 2
        assert window.start_index == 0
        np.testing.assert_array_equal(window.samples, [[1.0, 2.0], [3.0, 4.0]])

    def test_csv_nan_cell_rejected(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("x,y\n1,NaN\n")
        with pytest.raises(NonNumericCell):
            ingest(path, XY)

    def test_csv_text_cell_rejected(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("x,y\n1,hello\n")
        with pytest.raises(NonNumericCell):
            ingest(path, XY)

    def test_jsonl_matches_csv(self, tmp_path):
        csv_path = tmp_path / "t.csv"
        csv_path.write_text("x,y\n1,2\n3,4\n")
        jsonl_path = tmp_path / "t.jsonl"
        jsonl_path.write_text('{"x": 1.0, "y": 2.0}\n{"x": 3.0, "y": 4.0}\n')
        a = ingest(csv_path, XY, format="csv")
        b = ingest(jsonl_path, XY, format="jsonl")
        np.testing.assert_array_equal(a.samples, b.samples)

    def test_missing_column(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("x,w\n1,2\n")
        with pytest.raises(MissingColumn) as exc:
            ingest(path, XY)
        assert exc.value.name == "y"

    def test_extra_columns_ignored(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("y,extra,x\n2,9,1\n")
        window = ingest(path, XY)
        np.testing.assert_array_equal(window.samples, [[1.0, 2.0]])

    def test_empty_file(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("")
        with pytest.raises(EmptyFile):
            ingest(path, XY)

    def test_header_only_file(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("x,y\n")
        with pytest.raises(EmptyFile):
            ingest(path, XY)


class TestSaveTrace:
    @pytest.mark.parametrize("fmt", ["csv", "jsonl"])
    def test_round_trip_exact(self, tmp_path, fmt):
        rng = np.random.default_rng(5)
        window = make_window(rng.normal(size=(20, 2)))
        path = tmp_path / f"t.{fmt}"
        save_trace(window, path, fmt)
        back = ingest(path, XY, format=fmt)
        np.testing.assert_array_equal(back.samples, window.samples)


class TestWindow:
    def test_rejects_nan(self):
        with pytest.raises(NonNumericCell):
            make_window([[1.0, float("nan")]])

    def test_rejects_inf(self):
        with pytest.raises(NonNumericCell):
            make_window([[1.0, float("inf")]])

    def test_rejects_wrong_width(self):
        with pytest.raises(ShapeMismatch):
            TimeWindow(XY, np.zeros((3, 3)))

    def test_samples_read_only(self):
        window = make_window([[1.0, 2.0]])
        with pytest.raises(ValueError):
            window.samples[0, 0] = 9.0

    def test_capacity_defaults_to_fit_data(self):
        tall = make_window(np.zeros((800, 2)))
        assert tall.capacity == 800
        short = make_window(np.zeros((10, 2)))
        assert short.capacity == 500


class TestAppend:
    def test_evicts_and_advances(self):
        window = make_window([[1, 1], [2, 2], [3, 3]], capacity=3)
        out = append(window, [[4, 4]])
        assert len(out) == 3
        assert out.start_index == 1
        np.testing.assert_array_equal(out.samples[:, 0], [2, 3, 4])

    def test_within_capacity(self):
        window = make_window([[1, 1], [2, 2]], capacity=5)
        out = append(window, [[3, 3], [4, 4]])
        assert len(out) == 4
        assert out.start_index == 0

    def test_wrong_width(self):
        window = make_window([[1, 1]], capacity=5)
        with pytest.raises(ShapeMismatch):
            append(window, [[1, 2, 3]])

    def test_memory_bound_over_many_appends(self):
        rng = np.random.default_rng(0)
        window = make_window(rng.normal(size=(4, 2)), capacity=7)
        total = 4
        for _ in range(50):
            k = int(rng.integers(1, 5))
            window = append(window, rng.normal(size=(k, 2)))
            total += k
            assert len(window) <= 7
            assert window.start_index + len(window) == total

    def test_mask_evicts_with_rows(self):
        mask = np.zeros((3, 2), dtype=bool)
        mask[0, 1] = True
        mask[2, 0] = True
        window = make_window([[1, 1], [2, 2], [3, 3]], capacity=3, intervention_mask=mask)
        out = append(window, [[4, 4]])
        expected = np.zeros((3, 2), dtype=bool)
        expected[1, 0] = True
        np.testing.assert_array_equal(out.mask_or_false(), expected)


class TestStandardize:
    def test_two_point_column(self):
        window = make_window([[1, 10], [3, 10]])
        out = standardize(window)
        np.testing.assert_allclose(out.samples[:, 0], [-1.0, 1.0])

    def test_constant_column_flagged(self):
        window = make_window([[5, 1], [5, 2], [5, 3]])
        out = standardize(window)
        np.testing.assert_array_equal(out.samples[:, 0], [0.0, 0.0, 0.0])
        assert out.constant_columns == (0,)

    def test_idempotent(self):
        rng = np.random.default_rng(3)
        window = make_window(rng.normal(2.0, 5.0, size=(100, 2)))
        once = standardize(window)
        twice = standardize(once)
        np.testing.assert_allclose(twice.samples, once.samples, atol=1e-9)

    def test_population_sd_used(self):
        window = make_window([[1, 0], [3, 1]])
        out = standardize(window)
        # denominator T, not T - 1: sd of [1, 3] is exactly 1
        assert out.samples[1, 0] == pytest.approx(1.0, abs=1e-12)

    def test_too_few_rows(self):
        with pytest.raises(TooFewSamples):
            standardize(make_window([[1, 2]]))


class TestSliceWindow:
    def test_offsets_and_bounds(self):
        window = make_window([[i, i] for i in range(10)])
        part = slice_window(window, 3, 7)
        assert len(part) == 4
        assert part.start_index == 3
        np.testing.assert_array_equal(part.samples[:, 0], [3, 4, 5, 6])
        with pytest.raises(ShapeMismatch):
            slice_window(window, 7, 3)
