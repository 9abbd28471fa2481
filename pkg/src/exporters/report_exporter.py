"""
Report exporter for convergence and rate reports.

CSV and JSON are written with fixed formatting so identical runs produce
byte-identical files; the Excel workbook gets one formatted sheet per table.
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import pandas as pd
from openpyxl import load_workbook
from openpyxl.styles import Alignment, Border, Font, PatternFill, Side
from openpyxl.utils import get_column_letter

from src.models.report import ConvergenceReport, RateReport

logger = logging.getLogger(__name__)

CSV_COLUMNS = ['n', 'observed', 'factorial_bound', 'geometric_bound', 'euler_matched']
FLOAT_FORMAT = '%.17g'

Report = Union[ConvergenceReport, RateReport]


def _euler_by_n(rates: Optional[RateReport]) -> Dict[int, Optional[float]]:
    if rates is None:
        return {}
    return {row.n: row.euler_matched for row in rates.rows}


def report_frame(report: Report, rates: Optional[RateReport] = None) -> pd.DataFrame:
    """
    One row per iterate with the CSV columns.

    A RateReport carries its own Euler column; for a ConvergenceReport the
    column is filled from `rates` when given and left empty otherwise.
    """
    if isinstance(report, RateReport):
        records = [row.to_dict() for row in report.rows]
    else:
        euler = _euler_by_n(rates)
        records = []
        for row in report.rows:
            data = row.to_dict()
            data['euler_matched'] = euler.get(row.n)
            records.append(data)

    df = pd.DataFrame.from_records(records).reindex(columns=CSV_COLUMNS)
    df['n'] = df['n'].astype(int)
    return df.sort_values('n', kind='stable').reset_index(drop=True)


def _float_or_none(value: Any) -> Optional[float]:
    return None if value is None else float(value)


def report_document(report: ConvergenceReport, rates: Optional[RateReport] = None) -> Dict[str, Any]:
    """JSON document: the convergence report fields, plus the rate report when present."""
    data = report.to_dict()
    if rates is not None:
        data['rates'] = rates.to_dict()
    return data


class ReportExporter:
    """Export a convergence report (and optional rate report) to CSV, JSON and Excel."""

    def __init__(self, report: Report, rates: Optional[RateReport] = None):
        self.report = report
        self.rates = rates

    def export_csv(self, output_path: Union[str, Path]):
        output_path = Path(output_path)
        frame = report_frame(self.report, self.rates)
        frame.to_csv(output_path, index=False, float_format=FLOAT_FORMAT, na_rep='',
                     lineterminator='\n')
        logger.info("wrote %d rows to %s", len(frame), output_path)

    def export_json(self, output_path: Union[str, Path]):
        output_path = Path(output_path)
        if isinstance(self.report, ConvergenceReport):
            document = report_document(self.report, self.rates)
        else:
            document = self.report.to_dict()
        with open(output_path, 'w', encoding='utf-8') as f:
            json.dump(document, f, indent=2, sort_keys=True, allow_nan=False)
            f.write('\n')

    def export_excel(self, output_path: Union[str, Path]):
        """
        Export to an Excel workbook.

        Sheets: Summary, Iterations (every row field), Euler when a convergence
        study is available, Messages when violations or warnings were recorded.
        """
        output_path = Path(output_path)

        with pd.ExcelWriter(output_path, engine='openpyxl') as writer:
            self._write_summary(writer)
            self._write_iterations(writer)
            self._write_rates(writer)
            self._write_messages(writer)

        self._apply_formatting(output_path)

    def _write_summary(self, writer):
        data = self.report.to_dict()
        fields = [(key, value) for key, value in data.items()
                  if key not in ('rows', 'warnings', 'violations', 'euler_steps', 'euler_errors')]
        df = pd.DataFrame({'Field': [key for key, _ in fields],
                           'Value': [value for _, value in fields]})
        df.to_excel(writer, sheet_name='Summary', index=False)

    def _write_iterations(self, writer):
        df = pd.DataFrame.from_records([row.to_dict() for row in self.report.rows])
        df.to_excel(writer, sheet_name='Iterations', index=False)

    def _write_rates(self, writer):
        rates = self.rates if self.rates is not None else (
            self.report if isinstance(self.report, RateReport) else None)
        if rates is None or not rates.euler_steps:
            return
        df = pd.DataFrame({'h': rates.euler_steps,
                           'euler_error': [_float_or_none(e) for e in rates.euler_errors]})
        df.to_excel(writer, sheet_name='Euler', index=False)

    def _write_messages(self, writer):
        messages: List[Dict[str, str]] = []
        for kind, items in (('violation', self.report.violations),
                            ('warning', getattr(self.report, 'warnings', []))):
            messages.extend({'Kind': kind, 'Message': text} for text in items)
        if not messages:
            return
        pd.DataFrame(messages).to_excel(writer, sheet_name='Messages', index=False)

    def _apply_formatting(self, file_path: Path):
        """Apply formatting to the Excel workbook."""
        wb = load_workbook(file_path)

        header_fill = PatternFill(start_color="366092", end_color="366092", fill_type="solid")
        header_font = Font(bold=True, color="FFFFFF", size=11)
        violation_fill = PatternFill(start_color="F8CBAD", end_color="F8CBAD", fill_type="solid")

        border = Border(
            left=Side(style='thin'),
            right=Side(style='thin'),
            top=Side(style='thin'),
            bottom=Side(style='thin')
        )

        for sheet_name in wb.sheetnames:
            ws = wb[sheet_name]

            for cell in ws[1]:
                cell.fill = header_fill
                cell.font = header_font
                cell.alignment = Alignment(horizontal='center', vertical='center')
                cell.border = border

            # Auto-adjust column widths
            for column in ws.columns:
                column_letter = get_column_letter(column[0].column)
                max_length = max((len(str(cell.value)) for cell in column if cell.value is not None), default=0)
                ws.column_dimensions[column_letter].width = min(max_length + 2, 60)

            for row in ws.iter_rows(min_row=2):
                for cell in row:
                    cell.border = border
                    if isinstance(cell.value, float):
                        cell.number_format = '0.000E+00'
                        cell.alignment = Alignment(horizontal='right')

            if sheet_name == 'Messages':
                for row in ws.iter_rows(min_row=2):
                    if row[0].value == 'violation':
                        for cell in row:
                            cell.fill = violation_fill

            ws.freeze_panes = ws['A2']

        wb.save(file_path)


def export_report(report: Report, rates: Optional[RateReport] = None,
                  csv_path: Optional[Union[str, Path]] = None,
                  json_path: Optional[Union[str, Path]] = None,
                  excel_path: Optional[Union[str, Path]] = None):
    """
    Convenience function writing every requested format.

    Args:
        report: ConvergenceReport or RateReport
        rates: rate report merged into the CSV Euler column and the JSON document
    """
    exporter = ReportExporter(report, rates)
    if csv_path:
        exporter.export_csv(csv_path)
    if json_path:
        exporter.export_json(json_path)
    if excel_path:
        exporter.export_excel(excel_path)
