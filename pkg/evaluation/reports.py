"""Writers for evaluation reports: JSON summaries and the CMC curve as CSV."""

import csv
import json
import logging
from pathlib import Path

from forge.exceptions import OutputError

from .serializers import EvalReportSerializer

logger = logging.getLogger(__name__)


def report_data(report, **extra):
    data = dict(EvalReportSerializer(report).data)
    data.update(extra)
    return data


def write_json(path, data):
    path = Path(path)
    try:
        path.write_text(json.dumps(data, indent=2, sort_keys=True) + '\n', encoding='utf-8')
    except OSError as exc:
        raise OutputError(f'Cannot write {path}: {exc}') from exc
    logger.info(f'Wrote {path}')
    return path


def write_rows(path, header, rows):
    path = Path(path)
    try:
        with open(path, 'w', newline='', encoding='utf-8') as handle:
            writer = csv.writer(handle)
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise OutputError(f'Cannot write {path}: {exc}') from exc
    logger.info(f'Wrote {path}')
    return path


def write_cmc(path, report):
    return write_rows(path, ['rank', 'cmc'], [(r, repr(float(v))) for r, v in enumerate(report.cmc, start=1)])
