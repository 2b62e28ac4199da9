import math

import pytest
from openpyxl import load_workbook

from analysis import SweepRow
from excel_writer import COLUMN_PADDING, SHEET_NAME, write_sweep_workbook


@pytest.fixture
def sweep_rows():
    """Two converged rows and one divergent row."""
    return [
        SweepRow('NUDD', '2,2', 'F14i', 1.0, 0.0123, True, 8),
        SweepRow('SDD', '4,4', 'F14i', 1.0, 0.0098, True, 8),
        SweepRow('SDD', '4,4', 'F23c', 4.0, math.inf, False, 8),
    ]


def test_write_sweep_workbook_header_and_values(tmp_path, sweep_rows):
    """
    Tests that the header and every row land in the sheet in sweep order.
    """
    path = tmp_path / "sweep.xlsx"
    write_sweep_workbook(sweep_rows, str(path))

    sheet = load_workbook(path)[SHEET_NAME]
    assert [sheet.cell(row=1, column=c).value for c in range(1, 7)] == \
        ['scheme', 'counts', 'filter', 'alpha', 'I', 'converged']
    assert sheet['A2'].value == 'NUDD'
    assert sheet['B3'].value == '4,4'
    assert sheet['C4'].value == 'F23c'
    assert sheet['D4'].value == 4.0
    assert sheet['E2'].value == pytest.approx(0.0123)
    assert sheet.max_row == 4


def test_divergent_row_written_as_inf_text(tmp_path, sweep_rows):
    path = tmp_path / "sweep.xlsx"
    write_sweep_workbook(sweep_rows, str(path))

    sheet = load_workbook(path)[SHEET_NAME]
    assert sheet['E4'].value == 'inf'
    assert sheet['F4'].value == 'false'


def test_converged_fills(tmp_path, sweep_rows):
    """
    Tests that the converged column is green for converged rows and red otherwise.
    """
    path = tmp_path / "sweep.xlsx"
    write_sweep_workbook(sweep_rows, str(path))

    sheet = load_workbook(path)[SHEET_NAME]
    assert sheet['F2'].fill.start_color.rgb == '0000FF00'
    assert sheet['F3'].fill.start_color.rgb == '0000FF00'
    assert sheet['F4'].fill.start_color.rgb == '00FF0000'


def test_auto_filter_and_number_format(tmp_path, sweep_rows):
    path = tmp_path / "sweep.xlsx"
    write_sweep_workbook(sweep_rows, str(path))

    sheet = load_workbook(path)[SHEET_NAME]
    assert sheet.auto_filter.ref == "A1:F4"
    assert sheet['E2'].number_format == '0.000000E+00'


def test_empty_sweep_writes_header_only(tmp_path):
    path = tmp_path / "empty.xlsx"
    write_sweep_workbook([], str(path))

    sheet = load_workbook(path)[SHEET_NAME]
    assert sheet['A1'].value == 'scheme'
    assert sheet.max_row == 1


def test_column_widths_follow_content(tmp_path, sweep_rows):
    """
    Tests that each column is sized to its longest entry plus padding.
    """
    rows = sweep_rows + [SweepRow('NUDD', '16,16,16', 'c:7,0', 2.5, 1.5e-7, True, 5000)]
    path = tmp_path / "sweep.xlsx"
    write_sweep_workbook(rows, str(path))

    sheet = load_workbook(path)[SHEET_NAME]
    widths = [sheet.column_dimensions[letter].width for letter in 'ABCDEF']
    assert widths == [6 + COLUMN_PADDING, 8 + COLUMN_PADDING, 6 + COLUMN_PADDING,
                      5 + COLUMN_PADDING, len("1.230000E-02") + COLUMN_PADDING, 9 + COLUMN_PADDING]
