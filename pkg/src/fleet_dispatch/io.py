"""File helpers: canonical JSON, CSV, and write-then-rename outputs."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

from .errors import InputError
from .network import RoadNetwork
from .scenario import Scenario

FORMAT_VERSION = 1


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_atomic(path, text: str) -> Path:
    """Write ``text`` so that readers only ever see the old or the complete new file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_json(path, obj) -> Path:
    return write_atomic(path, dumps(obj))


def write_csv(path, header, rows) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return write_atomic(path, buf.getvalue())


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def load_network(path) -> RoadNetwork:
    return RoadNetwork.from_dict(read_json(path))


def load_scenario(path) -> Scenario:
    """Read a scenario file; a string ``network`` entry is a path relative to it."""
    data = read_json(path)
    if not isinstance(data, dict):
        raise InputError("scenario file must hold a JSON object")
    net = None
    ref = data.get("network")
    if isinstance(ref, str):
        net = load_network(Path(path).parent / ref)
    return Scenario.from_dict(data, network=net)


def save_scenario(path, sc: Scenario) -> Path:
    return write_json(path, sc.to_dict())
