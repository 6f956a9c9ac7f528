"""Extended-real helpers.

``math.inf`` is the one representation of +inf used throughout the package.
It is produced only by explicit rules below, never by dividing by zero.
"""

import math

INF = math.inf


def reciprocal(value):
    """Return 1/value with the conventions 1/0 = +inf and 1/+inf = 0."""
    if value < 0:
        raise ValueError("reciprocal is defined here for nonnegative values only")
    if value == 0:
        return INF
    if math.isinf(value):
        return 0.0
    return 1.0 / value


def is_finite(value):
    return value is not None and math.isfinite(value)


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats for JSON."""
    import numpy as np

    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def from_jsonable(value):
    """Inverse of :func:`to_jsonable` for extended reals, recursing into containers."""
    if isinstance(value, dict):
        return {k: from_jsonable(v) for k, v in value.items()}
    if isinstance(value, list):
        return [from_jsonable(v) for v in value]
    if value == "inf":
        return INF
    if value == "-inf":
        return -INF
    if value == "nan":
        return math.nan
    return value
