import json
import math
from typing import Any, Optional

import click
import numpy as np


class CustomJSONEncoder(json.JSONEncoder):
    """
    Custom JSON encoder to handle numpy scalars and arrays.
    Non-finite floats (e.g. a -inf log-probability) are emitted as null.
    """
    def default(self, o):
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return _finite_or_none(float(o))
        if isinstance(o, np.ndarray):
            return _sanitize(o.tolist())
        return super().default(o)

    def iterencode(self, o, _one_shot=False):
        return super().iterencode(_sanitize(o), _one_shot)


def _finite_or_none(value: float) -> Optional[float]:
    return value if math.isfinite(value) else None


def _sanitize(o: Any) -> Any:
    if isinstance(o, float):
        return _finite_or_none(o)
    if isinstance(o, dict):
        return {k: _sanitize(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_sanitize(v) for v in o]
    return o


def to_json(record: Any) -> str:
    return json.dumps(record, cls=CustomJSONEncoder, ensure_ascii=False)


def success_response(result=None, message="Success", meta=None):
    """
    Writes a standardized success record to standard output as one JSON line.
    Returns exit status 0.
    """
    click.echo(to_json({"success": True, "message": message, "data": {"results": result if result is not None else [], "meta": meta or {}}}))
    return 0


def emit_record(record: Any) -> None:
    """Writes a bare JSON record (one line) to standard output."""
    click.echo(to_json(record))


def error_response(error_code="data_error", message="An error occurred.", details=None, status=1):
    """
    Writes a standardized error object to the diagnostic stream.
    Returns the exit status the command should terminate with.
    """
    click.echo(
        to_json(
            {
                "success": False,
                "error": {
                    "code": error_code,
                    "message": message,
                    "details": details or {},
                },
            }
        ),
        err=True,
    )
    return status
