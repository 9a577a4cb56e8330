"""
Deterministic JSON and CSV writers.

Floats in CSV files are written in scientific notation with ``CSV_DIGITS``
significant digits, so identical inputs give byte-identical files.
"""
import csv
import json
import logging
import math
from numbers import Integral, Real
from typing import Any, Dict, Iterable, Sequence

import numpy as np

from multiphasetorsion.exceptions import ReportWriteError

logger = logging.getLogger(__name__)


def to_jsonable(value: Any) -> Any:
    """
    Convert numpy values and objects with ``to_dict()`` into plain JSON types;
    non-finite floats become ``None``.
    """
    if hasattr(value, "to_dict"):
        return to_jsonable(value.to_dict())
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, Integral):
        return int(value)
    if isinstance(value, Real):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def format_value(value: Any, digits: int = 17) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, Integral):
        return str(int(value))
    if isinstance(value, Real):
        return "%.*e" % (digits - 1, float(value))
    return str(value)


def write_csv(
    path: str, header: Sequence[str], rows: Iterable[Sequence[Any]], digits: int = 17
) -> str:
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_value(v, digits) for v in row])
    except OSError as e:
        raise ReportWriteError(f"Unable to write '{path}': {e}", path=path) from e
    logger.debug("Wrote %s", path)
    return path


def write_json(path: str, payload: Any) -> str:
    try:
        with open(path, "w") as fh:
            json.dump(to_jsonable(payload), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as e:
        raise ReportWriteError(f"Unable to write '{path}': {e}", path=path) from e
    logger.debug("Wrote %s", path)
    return path


def emit_report(result: Any, paths: Dict[str, str], digits: int = 17) -> Dict[str, str]:
    """
    Write ``result`` to the requested ``paths``.

    ``paths["json"]`` receives ``result.to_dict()``; ``paths["csv"]`` receives
    ``result.to_rows()`` under ``result.header()``.

    .. code-block:: python

        emit_report(report, {"json": "verify.json", "csv": "traces.csv"})
    """
    written = {}
    if paths.get("json"):
        written["json"] = write_json(paths["json"], result)
    if paths.get("csv"):
        written["csv"] = write_csv(
            paths["csv"], result.header(), result.to_rows(), digits
        )
    return written
