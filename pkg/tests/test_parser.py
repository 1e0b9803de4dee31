import numpy as np
import pandas as pd
import pytest

from partitiontools.diagnostics import full_report
from partitiontools.energy import BulkTermSpec, total_energy
from partitiontools.exceptions import FormatError, PreconditionError
from partitiontools.grid import Grid, Partition, ScalarField, constant_field
from partitiontools.optimizer import EnergyTrace, TraceRecord
from partitiontools.parser import (REPORT_SECTIONS, format_breakdown, format_pgm, path_to_lines, read_field,
                                   read_h_table, read_labels, read_mask, read_report, read_trace, write_field,
                                   write_labels, write_mask, write_report, write_trace)

from conftest import bisection, unit_square


def _write(path, text: str) -> str:
    path.write_bytes(text.encode("ascii") if isinstance(text, str) else text)
    return str(path)


def test_field_round_trip_is_exact(tmp_path, rng):
    grid = Grid(7, 3, 0.1)
    field = ScalarField(grid, rng.normal(size=grid.shape) * 1e3)
    path = str(tmp_path / "f.field")
    write_field(path, field)
    again = read_field(path)
    assert again.grid.h == 0.1
    assert np.array_equal(again.values, field.values)


def test_field_with_mask_round_trip(tmp_path):
    mask = np.array([[True, False], [True, True]])
    grid = Grid(2, 2, 0.5, mask)
    write_mask(str(tmp_path / "m.mask"), grid)
    write_field(str(tmp_path / "f.field"), ScalarField(grid, [[1.5, 9.0], [2.5, 3.5]]))
    read_back = read_mask(str(tmp_path / "m.mask"))
    assert np.array_equal(read_back, mask)
    field = read_field(str(tmp_path / "f.field"), mask=read_back)
    assert field.values.tolist() == [[1.5, 0.0], [2.5, 3.5]]


def test_labels_round_trip(tmp_path):
    grid = Grid(8, 8, 1.0)
    p = bisection(grid)
    path = str(tmp_path / "labels.txt")
    write_labels(path, p)
    assert read_labels(path, grid).same_as(p)
    with open(path) as f:
        assert f.readline() == "LABELS 8 8 2\n"
        assert f.readline() == "1 1 1 1 2 2 2 2\n"


def test_bad_token_names_its_byte_offset(tmp_path):
    path = _write(tmp_path / "bad.field", "FIELD 2 2 1\n1 2\n3 x\n")
    with pytest.raises(FormatError, match="byte offset 18"):
        read_field(path)


@pytest.mark.parametrize("text", [
    "FIELD 2 2 1\n1 2\n",
    "FIELD 2 2 1\n1 2\n3 4\n5 6\n",
    "FIELD 2 2 1\n1 2 3\n3 4\n",
    "FIELD 2 2\n1 2\n3 4\n",
    "FELD 2 2 1\n1 2\n3 4\n",
    "FIELD 2 2 1\r\n1 2\r\n3 4\r\n",
    "FIELD 0 2 1\n",
    "",
])
def test_malformed_fields(tmp_path, text):
    with pytest.raises(FormatError):
        read_field(_write(tmp_path / "bad.field", text))


def test_non_ascii_bytes_are_rejected(tmp_path):
    path = _write(tmp_path / "bad.field", "FIELD 1 1 1\né\n".encode("utf-8"))
    with pytest.raises(FormatError, match="byte offset 12"):
        read_field(path)


def test_missing_file_is_a_format_error(tmp_path):
    with pytest.raises(FormatError):
        read_field(str(tmp_path / "nowhere.field"))


def test_field_on_the_wrong_grid(tmp_path):
    path = _write(tmp_path / "f.field", "FIELD 2 2 1\n1 2\n3 4\n")
    with pytest.raises(PreconditionError):
        read_field(path, grid=Grid(3, 2, 1.0))


def test_labels_out_of_range(tmp_path):
    path = _write(tmp_path / "labels.txt", "LABELS 2 1 2\n1 3\n")
    with pytest.raises(FormatError, match="byte offset 13"):
        read_labels(path, Grid(2, 1, 1.0))


def test_labels_must_be_zero_outside_the_mask(tmp_path):
    grid = Grid(2, 1, 1.0, np.array([[True, False]]))
    assert read_labels(_write(tmp_path / "ok.txt", "LABELS 2 1 2\n2 0\n"), grid).labels.tolist() == [[2, 0]]
    with pytest.raises(FormatError):
        read_labels(_write(tmp_path / "bad.txt", "LABELS 2 1 2\n2 1\n"), grid)


def test_label_raster_of_another_size(tmp_path):
    path = _write(tmp_path / "labels.txt", "LABELS 2 1 2\n1 2\n")
    with pytest.raises(PreconditionError):
        read_labels(path, Grid(3, 1, 1.0))


def test_mask_values_must_be_binary(tmp_path):
    with pytest.raises(FormatError):
        read_mask(_write(tmp_path / "m.mask", "MASK 2 1\n1 2\n"))


def test_lines_carry_their_offsets(tmp_path):
    path = _write(tmp_path / "x.txt", "ab\n\ncd\n")
    assert path_to_lines(path) == [(0, "ab"), (3, ""), (4, "cd")]


def test_trace_round_trip(tmp_path):
    trace = EnergyTrace([TraceRecord(1, 0.1, 0.2, 0.1 + 0.2, 5, 1, 0.0),
                         TraceRecord(2, 1 / 3, 0.0, 1 / 3, 0, 0, 0.25)])
    path = str(tmp_path / "trace.csv")
    write_trace(path, trace)
    with open(path) as f:
        assert f.readline() == "sweep,F,G,J,flips,pours,temperature\n"
    assert read_trace(path).records == trace.records


def test_trace_header_is_checked(tmp_path):
    with pytest.raises(FormatError):
        read_trace(_write(tmp_path / "trace.csv", "sweep,J\n1,2\n"))


def test_h_table(tmp_path):
    xs, ys = read_h_table(_write(tmp_path / "h.csv", "volume,value\n0,0\n0.5,1\n1,4\n"))
    assert xs.tolist() == [0.0, 0.5, 1.0]
    assert ys.tolist() == [0.0, 1.0, 4.0]
    with pytest.raises(FormatError):
        read_h_table(_write(tmp_path / "bad.csv", "v,h\n0,0\n"))


def test_pgm_header():
    text = format_pgm(Partition(Grid(4, 2, 1.0), 3, [[1, 2, 3, 1], [1, 1, 1, 1]]))
    assert text.startswith("P2\n4 2\n3\n1 2 3 1\n")


def test_breakdown_lists_per_phase_perimeters():
    grid = Grid(2, 2, 1.0)
    p = Partition(grid, 2, [[1, 2], [1, 2]])
    text = format_breakdown(total_energy(p, constant_field(grid, 1.0), BulkTermSpec()))
    assert "interface_term=4\n" in text
    assert "per_phase_perimeter=2,2\n" in text


def test_report_sections_and_summary(tmp_path):
    p = bisection(unit_square(32))
    report = full_report(p, constant_field(p.grid, 1.0, delta=0.1), BulkTermSpec())
    path = str(tmp_path / "report.txt")
    write_report(path, report)
    with open(path) as f:
        headers = [line.strip()[1:-1] for line in f if line.startswith("[")]
    assert headers == REPORT_SECTIONS
    sections = read_report(path)
    assert sections["summary"]["nontrivial_phases"] == "2"
    assert sections["summary"]["gauge"] == "nan"
    phases = {record["phase"] for record in sections["ahlfors"]}
    assert phases == {"0", "1", "2"}
    whole = [record for record in sections["ahlfors"] if record["phase"] == "0"]
    assert len(whole) == len(report.ahlfors)
    assert sections["junctions"] == []


def test_report_errors_are_listed(tmp_path):
    grid = unit_square(8)
    p = Partition(grid, 2, np.ones(grid.shape, dtype=np.int64))
    path = str(tmp_path / "report.txt")
    write_report(path, full_report(p, constant_field(grid, 1.0), BulkTermSpec()))
    summary = read_report(path)["summary"]
    assert "error_ahlfors" in summary
    assert summary["nontrivial_phases"] == "1"


def test_unknown_report_section(tmp_path):
    with pytest.raises(FormatError):
        read_report(_write(tmp_path / "r.txt", "[extras]\n"))


def test_trace_frame_is_plain_csv(tmp_path):
    trace = EnergyTrace([TraceRecord(1, 2.0, 0.0, 2.0, 0, 0, 0.0)])
    path = str(tmp_path / "trace.csv")
    write_trace(path, trace)
    frame = pd.read_csv(path)
    assert frame.J.tolist() == [2.0]
