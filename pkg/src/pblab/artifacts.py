"""Atomic result persistence: CSV tables, JSON dumps, run manifests.

Every file is written to a temporary name in the target directory and
moved into place with os.replace, so readers never see partial output.
Floats in CSV cells carry 17 significant digits; JSON floats use exact
round-trip repr.  Identical inputs therefore produce byte-identical
artifacts.
"""
from __future__ import annotations

import hashlib
import json
import os
import sys
import tempfile
from typing import Iterable, Sequence

import numpy as np


def format_value(v) -> str:
    """Cell formatting: 17 significant digits for floats."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (complex, np.complexfloating)):
        c = complex(v)
        return f"{c.real:.17g}{c.imag:+.17g}j"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _write_bytes_atomic(path: str, data: bytes) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_text(path: str, text: str) -> None:
    _write_bytes_atomic(path, text.encode("utf-8"))


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    lines = [",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row width {len(row)} != header width {len(header)}")
        lines.append(",".join(format_value(v) for v in row))
    write_text(path, "\n".join(lines) + "\n")


def _json_default(v):
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, (complex, np.complexfloating)):
        c = complex(v)
        return {"re": c.real, "im": c.imag}
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not JSON-serializable: {type(v)}")


def write_json(path: str, obj) -> None:
    write_text(path, json.dumps(obj, indent=2, sort_keys=True,
                                default=_json_default) + "\n")


def sha256_of(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def versions() -> dict[str, str]:
    import scipy

    import pblab

    return {
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pblab": pblab.__version__,
    }


def config_sha(resolved: dict) -> str:
    """Hash of the fully resolved parameter block."""
    return hashlib.sha256(json.dumps(resolved, sort_keys=True).encode()).hexdigest()


def embed_config_hash(path: str, sha: str) -> None:
    """Stamp the resolved-config hash into an artifact in place.

    CSV artifacts get a leading comment line before the header; JSON
    artifacts get a top-level config_sha256 key.
    """
    if path.endswith(".csv"):
        with open(path, "rb") as fh:
            body = fh.read()
        _write_bytes_atomic(path, f"# config {sha}\n".encode() + body)
    elif path.endswith(".json"):
        with open(path) as fh:
            data = json.load(fh)
        data["config_sha256"] = sha
        write_json(path, data)
    else:
        raise ValueError(f"cannot embed a config hash in {path!r}")


def write_manifest(out_dir: str, command: str, argv: list[str],
                   resolved: dict, seed: int | None,
                   wall_time_s: float, artifact_names: list[str],
                   threads: int | None) -> str:
    """Record what produced the artifacts in ``out_dir``.

    The resolved parameter block (not just the command line) is embedded,
    so a run can be repeated exactly from the manifest alone; each
    artifact is listed with its content hash.
    """
    arts = {}
    for name in sorted(artifact_names):
        arts[name] = sha256_of(os.path.join(out_dir, name))
    body = {
        "command": command,
        "argv": argv,
        "resolved_config": resolved,
        "config_sha256": config_sha(resolved),
        "seed": seed,
        "threads": threads,
        "versions": versions(),
        "wall_time_s": wall_time_s,
        "artifacts": arts,
    }
    path = os.path.join(out_dir, "manifest.json")
    write_json(path, body)
    return path
