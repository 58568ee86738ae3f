#!/usr/bin/env python
# -*- coding: utf-8 -*-

import json
import math
import logging
import numpy
import pandas
from pathlib import Path
from dataclasses import dataclass, field

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.10g'
""" Ten significant digits in every emitted table """

MISSING = '-'
""" Rendering of undefined entries, e.g. the correlation of a zero-variance link """


@dataclass
class ReportBundle(object):
    output_directory: Path
    """ Directory receiving the files """
    files: dict = field(default_factory=dict)
    """ Emitted files by report name """
    log: dict = field(default_factory=dict)
    """ Residuals, iteration counts and, on request, timings of the run """

    def path(self, file_name: str) -> Path:
        return Path(self.output_directory).joinpath(file_name)

    def add(self, name: str, path: Path) -> Path:
        self.files[name] = Path(path)
        return Path(path)

    def write_log(self, file_name: str = 'run_log.json') -> Path:
        data = dict(self.log, files={name: str(path) for name, path in sorted(self.files.items())})
        return self.add('run_log', emit_json(data, self.path(file_name)))


def emit_table(matrix, row_ids, col_ids, path: str | Path, index_label: str = 'link') -> Path:
    """
    Writes a labelled matrix as CSV: a header row with the column ids, then one row per
    row id. The output is byte-identical for identical input.

    :param      matrix:       The matrix
    :type       matrix:       array-like
    :param      row_ids:      Row labels
    :type       row_ids:      list
    :param      col_ids:      Column labels
    :type       col_ids:      list
    :param      path:         Output file
    :type       path:         str | Path
    :param      index_label:  Header of the label column
    :type       index_label:  str

    :returns:   The path written.
    :rtype:     Path
    """
    matrix = numpy.atleast_2d(numpy.asarray(matrix, dtype=float))
    row_ids, col_ids = [str(i) for i in row_ids], [str(i) for i in col_ids]

    if matrix.shape != (len(row_ids), len(col_ids)):
        raise ValueError(f"Matrix has shape {matrix.shape}, labels give ({len(row_ids)}, {len(col_ids)})")

    frame = pandas.DataFrame(matrix, index=pandas.Index(row_ids, name=index_label), columns=col_ids)

    return emit_frame(frame, path)


def emit_frame(frame: pandas.DataFrame, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    frame.to_csv(path, float_format=FLOAT_FORMAT, na_rep=MISSING, lineterminator='\n')

    logger.info(f"Wrote {path}")
    return path


def to_serializable(value):
    """
    JSON-ready copy of nested containers, numpy arrays and scalars; NaN and infinities
    become null.
    """
    match value:
        case dict():
            return {str(key): to_serializable(item) for key, item in value.items()}
        case list() | tuple():
            return [to_serializable(item) for item in value]
        case numpy.ndarray():
            return to_serializable(value.tolist())
        case numpy.bool_():
            return bool(value)
        case numpy.integer():
            return int(value)
        case float() | numpy.floating():
            return float(value) if math.isfinite(value) else None
        case Path():
            return str(value)
        case _:
            return value


def emit_json(data: dict, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    with open(path, 'w', newline='\n') as f:
        json.dump(to_serializable(data), f, indent=4, allow_nan=False)
        f.write('\n')

    logger.info(f"Wrote {path}")
    return path

# -
