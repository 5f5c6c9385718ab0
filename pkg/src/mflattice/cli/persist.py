"""Deterministic CSV artifacts and run manifests."""

import csv
from dataclasses import dataclass
import hashlib
import io
import json
from pathlib import Path
import subprocess
import time

import numpy as np

__all__ = ["Table", "format_value", "table_bytes", "persist_run", "git_revision"]

MANIFEST = "manifest.json"


@dataclass
class Table:
    """A named long-format table written as ``<name>.csv``."""

    name: str
    header: list
    rows: list


def format_value(v):
    """Locale-independent text for one cell; floats round-trip exactly."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def table_bytes(table):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.header)
    for row in table.rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue().encode("utf-8")


def git_revision(path="."):
    try:
        out = subprocess.run(["git", "rev-parse", "HEAD"], cwd=path, capture_output=True, text=True,
                             timeout=5, check=False)
    except (OSError, subprocess.SubprocessError):
        return None
    return out.stdout.strip() or None


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def persist_run(artifacts, out_dir, config=None, seeds=None, started=None, extra=None):
    """Write tables (and raw files) plus a manifest with their SHA-256 hashes.

    Parameters
    ----------
    artifacts : list of Table or (name, bytes)
        Tables become ``name.csv``; byte payloads are written as ``name``.
    config : dict, optional
        Config snapshot stored in the manifest.
    started : float, optional
        ``time.time()`` at the start of the run, for the wall time entry.

    Returns
    -------
    dict
        The manifest, also written to ``out_dir/manifest.json``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    for art in artifacts:
        if isinstance(art, Table):
            name, payload = f"{art.name}.csv", table_bytes(art)
        else:
            name, payload = art
        (out / name).write_bytes(payload)
        files[name] = hashlib.sha256(payload).hexdigest()
    manifest = {
        "files": dict(sorted(files.items())),
        "config": _jsonable(config or {}),
        "seeds": _jsonable(seeds or {}),
        "git_revision": git_revision(Path(__file__).parent),
        "wall_time_s": None if started is None else round(time.time() - started, 3),
    }
    if extra:
        manifest.update(_jsonable(extra))
    (out / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest
