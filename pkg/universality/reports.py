from evaluation.reports import write_json, write_rows

from .serializers import InvarianceReportSerializer


def write_invariance(report, json_path, csv_path):
    write_json(json_path, dict(InvarianceReportSerializer(report).data))
    write_rows(csv_path, ['factor', 'level', 'mean', 'std'], [
        (code, level, repr(mean), repr(std)) for code, level, mean, std in report.rows()
    ])
