"""Output formatting: CSV rendering, column order, heatmaps, manifests."""

import json
import math

import numpy as np

from heatgrid.report import (
    MASTER_COLUMNS,
    format_value,
    ordered_columns,
    write_csv,
    write_manifest,
    write_matrix_csv,
    write_svg_heatmap,
)


def test_format_value_cases():
    assert format_value(None) == ""
    assert format_value("x") == "x"
    assert format_value(True) == "true"
    assert format_value(False) == "false"
    assert format_value(np.bool_(True)) == "true"
    assert format_value(3) == "3"
    assert format_value(np.int64(-7)) == "-7"
    assert format_value(math.nan) == ""
    assert format_value(0.123456789) == "0.123457"
    assert format_value(20.0) == "20"
    assert format_value(np.float64(1e-12)) == "1e-12"


def test_ordered_columns_master_then_extras():
    rows = [{"mfpt": 1.0, "zeta": 2, "algorithm": "q"},
            {"environment": "interval41", "beta": 1}]
    cols = ordered_columns(rows)
    assert cols == ["environment", "algorithm", "mfpt", "beta", "zeta"]
    assert MASTER_COLUMNS.index("environment") < MASTER_COLUMNS.index("algorithm")
    assert MASTER_COLUMNS[-1] == "notes"


def test_write_csv_golden(tmp_path):
    path = tmp_path / "rows.csv"
    write_csv(path, [
        {"algorithm": "q", "mfpt": 19.5275, "checkpoint": 20000, "extra": None},
        {"algorithm": "sarsa", "mfpt": math.nan, "checkpoint": 50000, "extra": "hi"},
    ])
    assert path.read_bytes() == (
        b"algorithm,checkpoint,mfpt,extra\r\n"
        b"q,20000,19.5275,\r\n"
        b"sarsa,50000,,hi\r\n"
    )


def test_write_csv_explicit_columns(tmp_path):
    path = tmp_path / "explicit.csv"
    write_csv(path, [{"a": 1, "b": 2}], columns=["b", "a", "missing"])
    assert path.read_bytes() == b"b,a,missing\r\n2,1,\r\n"


def test_write_matrix_csv(tmp_path):
    path = tmp_path / "m.csv"
    write_matrix_csv(path, np.array([[1, 2.5], [0, 4]]))
    assert path.read_bytes() == b"1,2.5\r\n0,4\r\n"
    flat = tmp_path / "flat.csv"
    write_matrix_csv(flat, np.array([3, 1, 4]))
    assert flat.read_bytes() == b"3,1,4\r\n"


def test_svg_heatmap_shading_and_flip(tmp_path):
    path = tmp_path / "map.svg"
    write_svg_heatmap(path, np.array([[4.0, 0.0], [2.0, 4.0]]), cell_px=10)
    text = path.read_text()
    assert text.count("<rect") == 4
    # row 0 is drawn at the bottom (y = 10), row 1 at the top (y = 0)
    assert '<rect x="0" y="10" width="10" height="10" fill="rgb(0,0,0)"/>' in text
    assert '<rect x="10" y="10" width="10" height="10" fill="rgb(255,255,255)"/>' in text
    assert '<rect x="0" y="0" width="10" height="10" fill="rgb(128,128,128)"/>' in text
    assert 'width="20"' in text and 'height="20"' in text


def test_svg_heatmap_zero_matrix_is_white(tmp_path):
    path = tmp_path / "blank.svg"
    write_svg_heatmap(path, np.zeros((2, 3)))
    text = path.read_text()
    assert text.count("rgb(255,255,255)") == 6


def test_manifest_is_stable(tmp_path):
    path = tmp_path / "manifest.json"
    write_manifest(path, {"b": 1, "a": {"z": [1, 2], "y": "s"}})
    text = path.read_text()
    assert text.endswith("\n")
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"b": 1, "a": {"z": [1, 2], "y": "s"}}
