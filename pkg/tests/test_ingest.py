import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covprep.errors import (
    DuplicateDate,
    EmptyFile,
    EmptyRange,
    MalformedDate,
    MissingHeader,
    UnknownLocation,
)
from covprep.ingest import (
    INDEPENDENT_COLUMNS,
    NEW_COLUMNS,
    ColumnClass,
    ColumnGroup,
    SeriesFrame,
    classify_columns,
    filter_location,
    format_number,
    group_columns,
    parse_number,
    parse_owid_csv,
)

HEADER = "iso_code,continent,location,date,new_cases,total_cases,population,tests_units\n"


def write(tmp_path, body, header=HEADER, name="data.csv"):
    path = tmp_path / name
    path.write_text(header + body, encoding="utf-8")
    return path


class TestParseNumber:
    @pytest.mark.parametrize("cell, expected", [
        ("12", 12.0), ("-3.5", -3.5), ("1e3", 1000.0), ("2.5E-2", 0.025), (".5", 0.5), ("+7", 7.0),
    ])
    def test_accepts_numeric_forms(self, cell, expected):
        assert parse_number(cell) == expected

    @pytest.mark.parametrize("cell", ["", "  ", "n/a", "1,000", "abc", "1e", "--1"])
    def test_everything_else_is_missing(self, cell):
        assert np.isnan(parse_number(cell))

    def test_format_round_trip(self):
        for v in (0.1, 1e-300, 123456789.123, -0.0, 1417173120.0):
            assert parse_number(format_number(v)) == v
        assert format_number(np.nan) == ""


class TestParse:
    def test_groups_by_location_and_sorts(self, tmp_path):
        body = (
            "IND,Asia,India,2020-01-03,3,6,100,\n"
            "IND,Asia,India,2020-01-01,1,1,100,\n"
            "BTN,Asia,Bhutan,2020-01-01,0,0,7,\n"
            "IND,Asia,India,2020-01-02,2,3,100,samples tested\n"
        )
        frames = parse_owid_csv(write(tmp_path, body))
        assert sorted(frames) == ["BTN", "IND"]
        ind = frames["IND"]
        assert [str(d) for d in ind.dates] == ["2020-01-01", "2020-01-02", "2020-01-03"]
        np.testing.assert_array_equal(ind["new_cases"], [1, 2, 3])
        assert ind.population == 100
        assert ind.categorical["tests_units"] == ("", "samples tested", "")
        assert "tests_units" not in ind and "iso_code" not in ind

    def test_out_of_order_file_matches_sorted_file(self, tmp_path):
        rows = [f"IND,Asia,India,2020-01-0{d},{d},{d * 2},100,\n" for d in range(1, 8)]
        a = parse_owid_csv(write(tmp_path, "".join(rows), name="a.csv"))["IND"]
        shuffled = [rows[i] for i in (3, 0, 6, 2, 5, 1, 4)]
        b = parse_owid_csv(write(tmp_path, "".join(shuffled), name="b.csv"))["IND"]
        assert a.equals(b)

    def test_gap_days_become_missing_rows(self, tmp_path):
        body = "IND,Asia,India,2020-01-01,1,1,100,\nIND,Asia,India,2020-01-05,5,6,100,\n"
        ind = parse_owid_csv(write(tmp_path, body))["IND"]
        assert len(ind) == 5
        assert np.isnan(ind["new_cases"][1:4]).all()

    def test_single_blank_row(self, tmp_path):
        body = "IND,Asia,India,2020-01-01,,,,\n"
        ind = parse_owid_csv(write(tmp_path, body))["IND"]
        assert len(ind) == 1
        assert all(np.isnan(ind[c]).all() for c in ind.names)
        assert ind.population is None

    def test_missing_header(self, tmp_path):
        path = write(tmp_path, "IND,2020-01-01\n", header="iso_code,date\n")
        with pytest.raises(MissingHeader, match="location"):
            parse_owid_csv(path)

    def test_malformed_date(self, tmp_path):
        with pytest.raises(MalformedDate):
            parse_owid_csv(write(tmp_path, "IND,Asia,India,2020-13-01,1,1,100,\n"))

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("", encoding="utf-8")
        with pytest.raises(EmptyFile):
            parse_owid_csv(path)

    def test_duplicate_date(self, tmp_path):
        body = "IND,Asia,India,2020-01-01,1,1,100,\nIND,Asia,India,2020-01-01,2,2,100,\n"
        with pytest.raises(DuplicateDate):
            parse_owid_csv(write(tmp_path, body))

    def test_digest_recorded(self, india):
        assert len(india.source_digest) == 64


class TestFilter:
    def test_india_record_count(self, india):
        assert len(india) == 1680
        assert str(india.dates[0]) == "2020-01-05"
        assert india.location == "IND"

    def test_contiguous(self, india):
        assert np.all(np.diff(india.dates).astype(int) == 1)

    def test_one_day(self, india_frames):
        f = filter_location(india_frames, "IND", "2021-05-09", "2021-05-09")
        assert len(f) == 1

    def test_interior_gap_inserted(self, tmp_path):
        body = "".join(
            f"IND,Asia,India,2020-01-{d:02d},{d},{d},100,\n" for d in range(1, 11) if d not in (4, 5, 6)
        )
        frames = parse_owid_csv(write(tmp_path, body))
        f = filter_location(frames, "IND", "2020-01-01", "2020-01-10")
        assert len(f) == 10
        assert np.isnan(f["new_cases"][3:6]).all()

    def test_unknown_location(self, india_frames):
        with pytest.raises(UnknownLocation):
            filter_location(india_frames, "XXX", "2020-01-01", "2020-12-31")

    def test_empty_range(self, india_frames):
        with pytest.raises(EmptyRange):
            filter_location(india_frames, "IND", "2030-01-01", "2030-12-31")


class TestClassifyAndGroup:
    def test_definitions(self):
        dates = np.arange(np.datetime64("2020-01-01"), np.datetime64("2020-01-05"))
        f = SeriesFrame(dates, {
            "e": [np.nan] * 4,
            "c": [np.nan, 1.38e9, 1.38e9, np.nan],
            "v": [1, 2, np.nan, 2],
        }, "X", 10.0)
        cls = classify_columns(f)
        assert cls == {"e": ColumnClass.EMPTY, "c": ColumnClass.CONSTANT, "v": ColumnClass.VARIABLE}

    def test_india_counts(self, india):
        counts = {c: 0 for c in ColumnClass}
        for c in classify_columns(india).values():
            counts[c] += 1
        assert (counts[ColumnClass.EMPTY], counts[ColumnClass.CONSTANT], counts[ColumnClass.VARIABLE]) == (12, 15, 35)

    def test_groups_partition(self, india):
        groups = group_columns(india)
        assert set(groups) == set(india.names)
        assert groups["new_deaths"] is ColumnGroup.NEW_COLUMNS
        assert groups["stringency_index"] is ColumnGroup.INDEPENDENT
        assert groups["total_deaths_per_million"] is ColumnGroup.REMAINING
        assert {n for n, g in groups.items() if g is ColumnGroup.NEW_COLUMNS} == set(NEW_COLUMNS)
        assert {n for n, g in groups.items() if g is ColumnGroup.INDEPENDENT} == set(INDEPENDENT_COLUMNS)


class TestRoundTrip:
    def test_india_csv_round_trip(self, india, tmp_path):
        path = tmp_path / "rt.csv"
        india.to_csv(path)
        back = parse_owid_csv(path)["IND"]
        assert back.equals(india)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.one_of(st.none(), st.floats(allow_nan=False, allow_infinity=False, width=64)),
                    min_size=1, max_size=30))
    def test_values_bitwise(self, values):
        import tempfile
        from pathlib import Path

        dates = np.arange(len(values)) + np.datetime64("2021-03-01")
        col = np.array([np.nan if v is None else v for v in values], dtype=float)
        cats = {"iso_code": ("ABC",) * len(values), "location": ("Abc",) * len(values)}
        f = SeriesFrame(dates, {"x": col, "population": np.full(len(values), 5.0)}, "ABC", 5.0, cats)
        with tempfile.TemporaryDirectory() as d:
            p = Path(d) / "f.csv"
            f.to_csv(p)
            back = parse_owid_csv(p)["ABC"]
        assert back.equals(f)
