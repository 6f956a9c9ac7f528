"""Report writers: versioned JSON plus plot-ready CSV files."""

from __future__ import annotations

import csv
import json
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .extreal import to_jsonable

SCHEMA = 1


def dumps(payload, timestamp=False):
    doc = {"schema": SCHEMA, **payload}
    if timestamp:
        doc["generated_at"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return json.dumps(to_jsonable(doc), sort_keys=True, indent=2) + "\n"


def write_json(path, payload, timestamp=False):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(payload, timestamp))
    return path


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return path


def write_defect_curve(path, reports):
    rows = [(r.eps, r.defect, r.threshold, r.passed) for r in reports]
    return write_csv(path, ["eps", "defect", "threshold", "passed"], rows)


def write_image_points(path, cloud):
    """x and y columns per cloud point, with the cloud metadata in a JSON sidecar."""
    n = cloud.sources.shape[1]
    m = cloud.points.shape[1]
    header = [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(m)]
    rows = np.hstack([cloud.sources, cloud.points])
    path = write_csv(path, header, rows.tolist())
    Path(path).with_suffix(".json").write_text(
        json.dumps(to_jsonable(cloud.meta), sort_keys=True, indent=2) + "\n")
    return path


def write_pareto_points(path, points, sources=None):
    m = points.shape[1]
    header = [f"y{i + 1}" for i in range(m)]
    rows = points
    if sources is not None:
        header = [f"x{i + 1}" for i in range(sources.shape[1])] + header
        rows = np.hstack([sources, points])
    return write_csv(path, header, rows.tolist())
