import logging
import math
from typing import Sequence

from openpyxl import Workbook
from openpyxl.styles import Font, PatternFill
from openpyxl.styles.colors import Color
from openpyxl.utils import get_column_letter

from analysis import SWEEP_CSV_COLUMNS, SweepRow

logger = logging.getLogger(__name__)

SHEET_NAME = 'FACTOR SWEEP'
COLUMN_PADDING = 3


def write_sweep_workbook(rows: Sequence[SweepRow], excel_file: str) -> None:
    """
    Writes sweep rows to a new workbook: one header row, then one row per
    SweepRow in sweep order. The 'converged' cell is green for converged rows
    and red for divergent or unconverged ones; the I column is shown in
    scientific notation, the header carries an auto-filter and every column is
    as wide as its longest entry.

    Args:
        rows: sweep rows, as returned by factor_sweep
        excel_file (str): path of the .xlsx file to create (overwritten)
    """
    book = Workbook()
    sheet = book.active
    sheet.title = SHEET_NAME

    fill_converged = PatternFill(start_color=Color(rgb='0000FF00'), end_color=Color(rgb='0000FF00'), fill_type='solid')
    fill_failed = PatternFill(start_color=Color(rgb='00FF0000'), end_color=Color(rgb='00FF0000'), fill_type='solid')
    fill_paired = PatternFill(start_color=Color(rgb='00DDEBF7'), end_color=Color(rgb='00DDEBF7'), fill_type='solid')

    for column, title in enumerate(SWEEP_CSV_COLUMNS, start=1):
        cell = sheet.cell(row=1, column=column, value=title)
        cell.font = Font(bold=True)

    widths = [len(title) for title in SWEEP_CSV_COLUMNS]
    for i, row in enumerate(rows, start=2):
        sheet[f'A{i}'] = row.scheme
        sheet[f'B{i}'] = row.counts
        sheet[f'C{i}'] = row.filter
        sheet[f'D{i}'] = row.alpha
        # openpyxl cannot store infinities
        sheet[f'E{i}'] = row.I if math.isfinite(row.I) else 'inf'
        sheet[f'F{i}'] = 'true' if row.converged else 'false'

        sheet[f'E{i}'].number_format = '0.000000E+00'
        sheet[f'F{i}'].fill = fill_converged if row.converged else fill_failed
        if row.scheme == 'SDD':
            sheet[f'A{i}'].fill = fill_paired

        shown = (row.scheme, row.counts, row.filter, f"{row.alpha:g}",
                 f"{row.I:.6E}" if math.isfinite(row.I) else 'inf', sheet[f'F{i}'].value)
        widths = [max(width, len(text)) for width, text in zip(widths, shown)]

    # room for the auto-filter arrow
    for column, width in enumerate(widths, start=1):
        sheet.column_dimensions[get_column_letter(column)].width = width + COLUMN_PADDING
    sheet.auto_filter.ref = f"A1:{get_column_letter(len(SWEEP_CSV_COLUMNS))}{max(1, len(rows)) + 1}"
    sheet.freeze_panes = 'A2'

    book.save(excel_file)
    logger.info(f"Sweep workbook written with {len(rows)} row(s)")
