import json
import os

import pytest

from src.core.core_types import PiecewiseLinear, ReLUNetwork
from src.core.errors import InputFileError
from src.core.file_formats import (
    atomic_write_text,
    network_to_json,
    parse_document,
    read_function,
    read_network,
    read_pl,
    write_network,
    write_pl,
)


def test_network_file_is_bit_exact(tmp_path):
    net = ReLUNetwork.from_triples([(0.1, 1 / 3, -2.5e-17), (-3.0, 7.0, 1e300)])
    path = tmp_path / "net.json"
    write_network(path, net)
    assert read_network(path) == net
    assert json.loads(path.read_text())["format"] == 1


def test_pl_file_is_bit_exact(tmp_path):
    pl = PiecewiseLinear(knots=(-0.1, 2 / 3), knot_values=(1e-20, -4.0), m_left=0.3, m_right=-1.0)
    path = tmp_path / "pl.json"
    write_pl(path, pl)
    assert read_pl(path) == pl


def test_read_function_dispatches_on_document_kind(tmp_path, write_json):
    net_path = write_json("n.json", network_to_json(ReLUNetwork.from_triples([(1.0, 0.0, 1.0)])))
    pl_path = write_json("p.json", {"format": 1, "knots": [0.0], "values": [0.0], "m_left": 0.0, "m_right": 1.0})
    assert isinstance(read_function(net_path), ReLUNetwork)
    assert isinstance(read_function(pl_path), PiecewiseLinear)
    with pytest.raises(InputFileError, match="expected a network"):
        read_function(write_json("x.json", {"format": 1}))


def test_syntax_error_reports_line_and_column():
    with pytest.raises(InputFileError, match="line 2 column"):
        parse_document('{"units":\n  [1, }', "bad.json")


def test_unknown_format_version_rejected(write_json):
    with pytest.raises(InputFileError, match="format"):
        read_network(write_json("v2.json", {"format": 2, "units": []}))


def test_top_level_must_be_object():
    with pytest.raises(InputFileError, match="JSON object"):
        parse_document("[1, 2, 3]")


def test_bad_unit_reports_field_path(write_json):
    path = write_json("units.json", {"format": 1, "units": [[1, 0, 1], [1, 0]]})
    with pytest.raises(InputFileError, match=r"units\.1"):
        read_network(path)


def test_zero_slope_unit_rejected_with_path(write_json):
    path = write_json("zero.json", {"format": 1, "units": [[0, 1, 1]]})
    with pytest.raises(InputFileError, match="units.0"):
        read_network(path)


def test_unsorted_pl_knots_rejected(write_json):
    path = write_json("pl.json", {"format": 1, "knots": [1.0, 0.0], "values": [0, 0]})
    with pytest.raises(InputFileError, match="strictly increasing"):
        read_pl(path)


def test_missing_file_is_input_error(tmp_path):
    with pytest.raises(InputFileError, match="cannot read"):
        read_network(tmp_path / "missing.json")


def test_atomic_write_leaves_no_temp_files(tmp_path):
    target = tmp_path / "sub" / "out.txt"
    atomic_write_text(target, "first")
    atomic_write_text(target, "second")
    assert target.read_text() == "second"
    assert os.listdir(target.parent) == ["out.txt"]
