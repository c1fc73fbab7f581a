import os
from typing import Any, Dict, List, Optional

from marshmallow import Schema, ValidationError

from app.utils.error_messages import ERROR_MESSAGES


def validate_config(schema: Schema, data: Optional[Dict[str, Any]] = None, partial: bool = False) -> Any:
    """
    Validate a configuration mapping against a Marshmallow schema.
    Returns whatever the schema's post_load hook builds (usually a frozen dataclass).
    """
    data = data or {}
    try:
        return schema.load(data, partial=partial)
    except ValidationError as err:
        raise ValueError(err.messages)


def require_file(path: str) -> str:
    """Raise FileNotFoundError naming the path if it does not exist."""
    if not path or not os.path.exists(path):
        raise FileNotFoundError(ERROR_MESSAGES["not_found"]["file"].format(path=path))
    return path


def parse_float_grid(text: str) -> List[float]:
    """'0,2,5' -> [0.0, 2.0, 5.0]"""
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ValueError(ERROR_MESSAGES["validation"]["invalid_grid"])
    if not values:
        raise ValueError(ERROR_MESSAGES["validation"]["invalid_grid"])
    return values


def drop_none(data: Dict[str, Any]) -> Dict[str, Any]:
    """Remove keys whose value is None (unset command-line flags)."""
    return {k: v for k, v in data.items() if v is not None}
