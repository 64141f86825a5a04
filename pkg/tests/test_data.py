"""Dataset ingestion, masking, and zero filling."""

import numpy as np
import pytest

from mcar_avg import DataError, ObservedDataset, RankError, load_csv, write_csv, zero_fill

from helpers import BLOCK_MISSING, block_dataset


def _write(tmp_path, text, name="data.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


class TestLoadCsv:
    def test_single_na_cell(self, tmp_path):
        p = _write(tmp_path, "y,x1,x2\n1,0.5,2.0\n0,NA,3.0\n1,1.5,4.0\n")
        d = load_csv(p)
        assert d.n_rows == 3 and d.n_columns == 2
        assert (~d.mask).sum() == 1
        assert not d.mask[1, 0]
        assert d.column_names == ("x1", "x2")
        np.testing.assert_array_equal(d.y, [1.0, 0.0, 1.0])

    def test_na_in_response_names_row(self, tmp_path):
        p = _write(tmp_path, "y,x1\n1,0.5\nNA,0.7\n")
        with pytest.raises(DataError, match="line 3"):
            load_csv(p)

    def test_non_numeric_cell(self, tmp_path):
        p = _write(tmp_path, "y,x1\n1,0.5\n0,oops\n")
        with pytest.raises(DataError, match="line 3.*oops"):
            load_csv(p)

    def test_ragged_row_names_line(self, tmp_path):
        p = _write(tmp_path, "y,x1,x2\n1,0.5,1.0\n0,0.7\n")
        with pytest.raises(DataError, match="line 3"):
            load_csv(p)

    def test_empty_file(self, tmp_path):
        with pytest.raises(DataError, match="empty"):
            load_csv(_write(tmp_path, ""))

    def test_header_only(self, tmp_path):
        with pytest.raises(DataError, match="no data rows"):
            load_csv(_write(tmp_path, "y,x1\n"))

    def test_missing_response_column(self, tmp_path):
        with pytest.raises(DataError, match="resp"):
            load_csv(_write(tmp_path, "y,x1\n1,2\n"), response_column="resp")

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="cannot read"):
            load_csv(tmp_path / "nope.csv")

    def test_custom_na_token_and_whitespace(self, tmp_path):
        p = _write(tmp_path, "y,x1\n1, .\n0, 2.5 \n")
        d = load_csv(p, na_token=".")
        assert not d.mask[0, 0] and d.mask[1, 0]
        assert d.x[1, 0] == 2.5

    def test_block_layout_mask_pattern(self, tmp_path):
        src = block_dataset()
        p = tmp_path / "block.csv"
        write_csv(src, p)
        d = load_csv(p)
        expected = np.ones((12, 5), dtype=bool)
        for col, rows in BLOCK_MISSING.items():
            expected[rows, col] = False
        np.testing.assert_array_equal(d.mask, expected)


class TestRoundTrip:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_write_then_load_preserves_mask_and_observed(self, tmp_path, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(7, 3))
        mask = rng.random((7, 3)) >= 0.35
        d = ObservedDataset(
            y=rng.normal(size=7), x=x, mask=mask, column_names=("a", "b", "c")
        )
        p = tmp_path / "rt.csv"
        write_csv(d, p)
        d2 = load_csv(p)
        np.testing.assert_array_equal(d2.mask, d.mask)
        np.testing.assert_array_equal(d2.y, d.y)
        np.testing.assert_array_equal(
            np.where(d2.mask, d2.x, 0.0), np.where(d.mask, d.x, 0.0)
        )
        assert d2.column_names == d.column_names

    def test_response_name_collision(self, tmp_path):
        d = block_dataset()
        with pytest.raises(DataError, match="collides"):
            write_csv(d, tmp_path / "c.csv", response_column="x1")


class TestObservedDataset:
    def test_shape_validation(self):
        with pytest.raises(DataError):
            ObservedDataset(
                y=np.ones(2), x=np.ones((3, 2)), mask=np.ones((3, 2), bool),
                column_names=("a", "b"),
            )
        with pytest.raises(DataError):
            ObservedDataset(
                y=np.ones(3), x=np.ones((3, 2)), mask=np.ones((3, 3), bool),
                column_names=("a", "b"),
            )

    def test_nonfinite_response_rejected(self):
        with pytest.raises(DataError, match="response"):
            ObservedDataset(
                y=np.array([1.0, np.nan]), x=np.ones((2, 1)),
                mask=np.ones((2, 1), bool), column_names=("a",),
            )

    def test_nonfinite_observed_covariate_rejected(self):
        x = np.array([[1.0], [np.inf]])
        with pytest.raises(DataError, match="finite"):
            ObservedDataset(
                y=np.zeros(2), x=x, mask=np.ones((2, 1), bool), column_names=("a",)
            )
        # the same value hidden behind the mask is fine
        d = ObservedDataset(
            y=np.zeros(2), x=x, mask=np.array([[True], [False]]), column_names=("a",)
        )
        assert not d.mask[1, 0]

    def test_arrays_immutable(self):
        d = block_dataset()
        with pytest.raises(ValueError):
            d.x[0, 0] = 9.0
        with pytest.raises(ValueError):
            d.mask[0, 0] = False


class TestZeroFill:
    def test_fully_observed_is_identity(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(6, 3))
        d = ObservedDataset(
            y=np.zeros(6), x=x, mask=np.ones((6, 3), bool), column_names=("a", "b", "c")
        )
        np.testing.assert_array_equal(zero_fill(d).xt, x)

    def test_block_layout_zero_positions(self):
        d = block_dataset()
        xt = zero_fill(d).xt
        for col, rows in BLOCK_MISSING.items():
            assert (xt[rows, col] == 0.0).all()
        np.testing.assert_array_equal(xt[d.mask], d.x[d.mask])

    def test_idempotent_in_value(self):
        d = block_dataset()
        xt = zero_fill(d).xt
        d2 = ObservedDataset(y=d.y, x=xt, mask=d.mask, column_names=d.column_names)
        np.testing.assert_array_equal(zero_fill(d2).xt, xt)

    def test_all_missing_column_rank_error(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(5, 2))
        mask = np.ones((5, 2), bool)
        mask[:, 1] = False
        d = ObservedDataset(y=np.zeros(5), x=x, mask=mask, column_names=("a", "b"))
        with pytest.raises(RankError, match="full column rank"):
            zero_fill(d)
