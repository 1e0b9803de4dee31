"""
Readers and writers of the ASCII file formats.

    FIELD nx ny h     then ny rows of nx floats, top row first
    MASK nx ny        then ny rows of nx 0/1 integers
    LABELS nx ny N    then ny rows of nx integers, 1..N inside the domain and 0 outside

Files are ASCII with LF line endings and tokens separated by spaces. Floats are written
with 17 significant digits, so write-then-read reproduces every value exactly. Every
format error names the byte offset where the problem was found.
"""
import io
import logging
import math
import re
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .energy import EnergyBreakdown
from .exceptions import FormatError, PreconditionError
from .file_storage import atomic_write
from .grid import Grid, Partition, ScalarField
from .optimizer import TRACE_COLUMNS, EnergyTrace, TraceRecord

logger = logging.getLogger(__name__)

_TOKEN = re.compile(r"[^ \t]+")
_FLOAT_FORMAT = "%.17g"
REPORT_SECTIONS = ["ahlfors", "condition_b", "isoperimetry", "junctions", "summary"]

Line = Tuple[int, str]


def _fail(path: str, offset: int, message: str) -> FormatError:
    return FormatError(f"{path}: byte offset {offset}: {message}")


def _read_ascii(path: str) -> str:
    try:
        with open(path, "rb") as f:
            raw = f.read()
    except OSError as e:
        raise FormatError(f"{path}: cannot read file ({e.strerror})") from e
    try:
        text = raw.decode("ascii")
    except UnicodeDecodeError as e:
        raise _fail(path, e.start, "non-ASCII byte") from e
    carriage_return = text.find("\r")
    if carriage_return >= 0:
        raise _fail(path, carriage_return, "carriage return found, expected LF line endings")
    return text


def path_to_lines(path: str) -> List[Line]:
    """Opens an ASCII file and returns its lines with the byte offset where each starts

    Args:
        path (str): path to the file

    Returns:
        List[Tuple[int, str]]: (byte offset, line) pairs, without the final empty line
    """
    text = _read_ascii(path)
    lines, offset = [], 0
    for line in text.split("\n"):
        lines.append((offset, line))
        offset += len(line) + 1
    if lines and lines[-1][1] == "":
        lines.pop()
    return lines


def _tokens(line: Line) -> List[Tuple[int, str]]:
    offset, text = line
    return [(offset + m.start(), m.group()) for m in _TOKEN.finditer(text)]


def _convert(path: str, token: Tuple[int, str], dtype, what: str):
    offset, text = token
    try:
        return dtype(text)
    except ValueError:
        raise _fail(path, offset, f"expected {what}, got {text!r}") from None


def _parse_header(path: str, lines: List[Line], magic: str, dtypes: Sequence) -> list:
    if not lines:
        raise _fail(path, 0, f"empty file, expected a {magic} header")
    tokens = _tokens(lines[0])
    if not tokens or tokens[0][1] != magic:
        raise _fail(path, tokens[0][0] if tokens else lines[0][0], f"expected header starting with {magic}")
    if len(tokens) != len(dtypes) + 1:
        raise _fail(path, lines[0][0], f"{magic} header needs {len(dtypes)} values, got {len(tokens) - 1}")
    return [_convert(path, token, dtype, dtype.__name__) for token, dtype in zip(tokens[1:], dtypes)]


def _end_offset(lines: List[Line]) -> int:
    offset, text = lines[-1]
    return offset + len(text) + 1


def _parse_rows(path: str, lines: List[Line], nx: int, ny: int, dtype, what: str) -> np.ndarray:
    rows = lines[1:]
    if len(rows) < ny:
        raise _fail(path, _end_offset(lines), f"expected {ny} rows, found {len(rows)}")
    if len(rows) > ny:
        raise _fail(path, rows[ny][0], f"unexpected content after {ny} rows")
    values = []
    for line in rows:
        tokens = _tokens(line)
        if len(tokens) != nx:
            raise _fail(path, line[0], f"expected {nx} values in the row, got {len(tokens)}")
        values.append([_convert(path, token, dtype, what) for token in tokens])
    return np.array(values, dtype=float if dtype is float else np.int64).reshape(ny, nx)


def _check_size(path: str, nx: int, ny: int):
    if nx < 1 or ny < 1:
        raise _fail(path, 0, f"grid size must be positive, got {nx}x{ny}")


def read_mask(path: str) -> np.ndarray:
    lines = path_to_lines(path)
    nx, ny = _parse_header(path, lines, "MASK", [int, int])
    _check_size(path, nx, ny)
    values = _parse_rows(path, lines, nx, ny, int, "0 or 1")
    bad = np.flatnonzero((values != 0) & (values != 1))
    if len(bad):
        row = int(bad[0]) // nx
        raise _fail(path, lines[1 + row][0], "mask values must be 0 or 1")
    return values.astype(bool)


def read_field(path: str, mask: Optional[np.ndarray] = None, grid: Optional[Grid] = None) -> ScalarField:
    """Reads a FIELD file. The grid comes from the header and ``mask``, or must match ``grid`` when given."""
    lines = path_to_lines(path)
    nx, ny, h = _parse_header(path, lines, "FIELD", [int, int, float])
    _check_size(path, nx, ny)
    values = _parse_rows(path, lines, nx, ny, float, "a decimal number")
    if grid is None:
        grid = Grid(nx, ny, h, mask)
    elif (nx, ny) != (grid.nx, grid.ny) or h != grid.h:
        raise PreconditionError(f"{path}: field is {nx}x{ny} with h={h}, expected {grid.nx}x{grid.ny} with h={grid.h}")
    logger.debug(f"Read {nx}x{ny} field from {path}")
    return ScalarField(grid, values)


def read_labels(path: str, grid: Grid) -> Partition:
    lines = path_to_lines(path)
    nx, ny, n_labels = _parse_header(path, lines, "LABELS", [int, int, int])
    _check_size(path, nx, ny)
    if (nx, ny) != (grid.nx, grid.ny):
        raise PreconditionError(f"{path}: label raster is {nx}x{ny}, grid is {grid.nx}x{grid.ny}")
    if n_labels < 1:
        raise _fail(path, lines[0][0], f"label count must be >= 1, got {n_labels}")
    labels = _parse_rows(path, lines, nx, ny, int, "an integer label")
    inside = grid.mask
    bad = np.flatnonzero((inside & ((labels < 1) | (labels > n_labels))) | (~inside & (labels != 0)))
    if len(bad):
        row = int(bad[0]) // nx
        raise _fail(path, lines[1 + row][0], f"labels must lie in 1..{n_labels} inside the domain and be 0 outside")
    return Partition(grid, n_labels, labels)


def _format_rows(values: np.ndarray, fmt: str) -> str:
    buffer = io.StringIO()
    np.savetxt(buffer, values, fmt=fmt, delimiter=" ", newline="\n")
    return buffer.getvalue()


def format_field(field: ScalarField) -> str:
    grid = field.grid
    return f"FIELD {grid.nx} {grid.ny} {_FLOAT_FORMAT % grid.h}\n" + _format_rows(field.values, _FLOAT_FORMAT)


def format_mask(grid: Grid) -> str:
    return f"MASK {grid.nx} {grid.ny}\n" + _format_rows(grid.mask.astype(np.int64), "%d")


def format_labels(p: Partition) -> str:
    grid = p.grid
    return f"LABELS {grid.nx} {grid.ny} {p.n_labels}\n" + _format_rows(p.labels, "%d")


def format_pgm(p: Partition) -> str:
    """Plain graymap (P2) of the labels; 0 marks cells outside the domain"""
    grid = p.grid
    return f"P2\n{grid.nx} {grid.ny}\n{p.n_labels}\n" + _format_rows(p.labels, "%d")


def write_field(path: str, field: ScalarField):
    atomic_write(path, format_field(field))


def write_mask(path: str, grid: Grid):
    atomic_write(path, format_mask(grid))


def write_labels(path: str, p: Partition):
    atomic_write(path, format_labels(p))


def write_pgm(path: str, p: Partition):
    atomic_write(path, format_pgm(p))


def format_trace(trace: EnergyTrace) -> str:
    return trace.to_frame().to_csv(index=False, float_format=_FLOAT_FORMAT, lineterminator="\n")


def write_trace(path: str, trace: EnergyTrace):
    atomic_write(path, format_trace(trace))


def read_trace(path: str) -> EnergyTrace:
    lines = path_to_lines(path)
    if not lines or lines[0][1] != ",".join(TRACE_COLUMNS):
        raise _fail(path, 0, f"expected trace header {','.join(TRACE_COLUMNS)}")
    try:
        frame = pd.read_csv(path, float_precision="round_trip",
                            dtype={"sweep": int, "flips": int, "pours": int,
                                   "F": float, "G": float, "J": float, "temperature": float})
    except (ValueError, pd.errors.ParserError) as e:
        raise FormatError(f"{path}: malformed trace ({e})") from e
    records = [TraceRecord(int(row.sweep), float(row.F), float(row.G), float(row.J), int(row.flips),
                           int(row.pours), float(row.temperature)) for row in frame.itertuples(index=False)]
    return EnergyTrace(records)


def read_h_table(path: str) -> Tuple[np.ndarray, np.ndarray]:
    """Tabulated h(v) as a two-column CSV with header ``volume,value``"""
    lines = path_to_lines(path)
    if not lines or lines[0][1] != "volume,value":
        raise _fail(path, 0, "expected header volume,value")
    try:
        frame = pd.read_csv(path, dtype=float, float_precision="round_trip")
    except (ValueError, pd.errors.ParserError) as e:
        raise FormatError(f"{path}: malformed h table ({e})") from e
    return frame.volume.to_numpy(), frame.value.to_numpy()


def _format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "nan" if math.isnan(value) else _FLOAT_FORMAT % value
    if isinstance(value, (tuple, list)):
        return ",".join(_format_value(v) for v in value)
    return str(value)


def _format_records(frame: pd.DataFrame, extra: Optional[Dict[str, object]] = None) -> List[str]:
    lines = []
    for record in frame.to_dict(orient="records"):
        items = {**(extra or {}), **record}
        lines.append(" ".join(f"{key}={_format_value(value)}" for key, value in items.items()))
    return lines


def format_breakdown(breakdown: EnergyBreakdown) -> str:
    items = {
        "interface_term": breakdown.interface_term,
        "interface_term_once": breakdown.interface_term_once,
        "bulk_term": breakdown.bulk_term,
        "total": breakdown.total,
        "interface_length": breakdown.interface_length_unweighted,
        "per_phase_perimeter": breakdown.per_phase_perimeter,
    }
    return "".join(f"{key}={_format_value(value)}\n" for key, value in items.items())


def format_key_values(items: Dict[str, object]) -> str:
    return "".join(f"{key}={_format_value(value)}\n" for key, value in items.items())


def format_report(report) -> str:
    """Report text: one [section] header per section, one record per line as key=value pairs"""
    lines = ["[ahlfors]"]
    lines += _format_records(report.ahlfors, {"phase": 0})
    lines += _format_records(report.per_phase_ahlfors)
    lines.append("[condition_b]")
    lines += _format_records(report.condition_b)
    lines.append("[isoperimetry]")
    lines += _format_records(report.isoperimetry)
    lines.append("[junctions]")
    lines += _format_records(report.junctions)
    lines.append("[summary]")
    lines += [f"{key}={_format_value(value)}" for key, value in report.summary.items()]
    lines += [f"error_{section}={message}" for section, message in report.errors.items()]
    return "\n".join(lines) + "\n"


def write_report(path: str, report):
    atomic_write(path, format_report(report))


def read_report(path: str) -> Dict[str, Union[List[Dict[str, str]], Dict[str, str]]]:
    """Parses a report back into raw strings: a list of records per scan section, a dict for the summary"""
    sections: Dict[str, Union[List[Dict[str, str]], Dict[str, str]]] = {}
    current = None
    for offset, line in path_to_lines(path):
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1]
            if current not in REPORT_SECTIONS:
                raise _fail(path, offset, f"unknown section {line}")
            sections[current] = {} if current == "summary" else []
        elif current is None:
            raise _fail(path, offset, "record before the first section header")
        elif current == "summary":
            key, sep, value = line.partition("=")
            if not sep:
                raise _fail(path, offset, "expected key=value")
            sections["summary"][key] = value
        else:
            record = {}
            for token_offset, token in _tokens((offset, line)):
                key, sep, value = token.partition("=")
                if not sep:
                    raise _fail(path, token_offset, "expected key=value")
                record[key] = value
            sections[current].append(record)
    return sections
