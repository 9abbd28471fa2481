"""Unit tests for CSV, JSON and Excel report export."""
import json
import math

from openpyxl import load_workbook

from src.exporters.report_exporter import CSV_COLUMNS, ReportExporter, export_report, report_frame
from src.models.report import ConvergenceReport, ConvergenceRow, RateReport, RateRow


def _report(violations=()):
    report = ConvergenceReport(problem_name="exp", mode="real-exact", alpha=1.0, L=1.0, M=math.e,
                               series_constant=math.e, reference_kind="closed-form", first_step=1.0)
    for n in range(3):
        report.rows.append(ConvergenceRow(n=n, observed=0.1 ** n, factorial_bound=math.e ** 2 / math.factorial(n),
                                          chain_bound=math.e / math.factorial(n), geometric_bound=None,
                                          defect_level=n, defect_value=math.inf))
    report.violations.extend(violations)
    return report


def _rates():
    rates = RateReport(entry_name="exp", alpha=1.0, L=1.0, reference_kind="closed-form",
                       euler_steps=[0.25, 0.125], euler_errors=[0.1, 0.05], euler_slope=1.0)
    rates.rows = [RateRow(n, 0.1 ** n, 1.0, None, euler) for n, euler in enumerate([0.01, 0.02, 0.03])]
    return rates


def test_csv_columns_and_empty_cells(tmp_path):
    path = tmp_path / "report.csv"
    ReportExporter(_report()).export_csv(path)
    lines = path.read_text(encoding="utf-8").splitlines()

    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 4
    assert lines[1].startswith("0,1,")
    assert lines[1].endswith(",,")


def test_csv_takes_euler_column_from_rates():
    frame = report_frame(_report(), _rates())
    assert list(frame.columns) == CSV_COLUMNS
    assert frame['euler_matched'].tolist() == [0.01, 0.02, 0.03]


def test_json_document(tmp_path):
    path = tmp_path / "report.json"
    export_report(_report(["n=1: observed above bound"]), _rates(), json_path=path)
    data = json.loads(path.read_text(encoding="utf-8"))

    assert data["problem_name"] == "exp"
    assert data["rows"][0]["defect_value"] is None
    assert data["violations"] == ["n=1: observed above bound"]
    assert data["rates"]["euler_slope"] == 1.0


def test_rate_report_json_has_no_nan(tmp_path):
    rates = _rates()
    rates.L = math.nan
    path = tmp_path / "rates.json"
    ReportExporter(rates).export_json(path)
    assert json.loads(path.read_text(encoding="utf-8"))["L"] is None


def test_excel_workbook(tmp_path):
    path = tmp_path / "report.xlsx"
    export_report(_report(["n=2: observed above bound"]), _rates(), excel_path=path)
    wb = load_workbook(path)

    assert wb.sheetnames == ["Summary", "Iterations", "Euler", "Messages"]
    messages = wb["Messages"]
    assert messages["A2"].value == "violation"
    assert messages["A2"].fill.start_color.rgb.endswith("F8CBAD")
    assert wb["Iterations"].freeze_panes == "A2"
