"""Run artifacts: delimited tables, JSON manifests, output directories.

Result tables are written with a header row and canonical float formatting
(shortest round-trip repr), so a command rerun with the same configuration
and seed produces byte-identical files.  The manifest carries the config
echo, library versions and wall time; wall time lives only there.
"""

from __future__ import annotations

import json
import os
import platform
import time
from pathlib import Path

import numpy as np

__all__ = ["resolve_outdir", "write_rows", "write_manifest", "format_cell"]

ENV_OUTDIR = "TREEMAX_OUTDIR"


def resolve_outdir(command: str, out: str | None) -> Path:
    if out:
        base = Path(out)
    elif os.environ.get(ENV_OUTDIR):
        base = Path(os.environ[ENV_OUTDIR]) / command
    else:
        base = Path("treemax_runs") / command
    base.mkdir(parents=True, exist_ok=True)
    return base


def format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_rows(path: Path, rows: list[dict], fmt: str = "csv") -> Path:
    if not rows:
        raise ValueError("no rows to write")
    header = list(rows[0].keys())
    if fmt == "csv":
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(format_cell(row[k]) for k in header))
        path = path.with_suffix(".csv")
        path.write_text("\n".join(lines) + "\n")
    elif fmt == "json":
        path = path.with_suffix(".json")
        clean = [
            {k: (format_cell(v) if isinstance(v, (np.generic,)) else v) for k, v in r.items()}
            for r in rows
        ]
        path.write_text(json.dumps(clean, indent=1, default=float) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return path


def write_manifest(
    outdir: Path,
    command: str,
    config: dict,
    started: float,
    outputs: list[str],
    verdict: str,
    extra: dict | None = None,
) -> Path:
    import treemax

    manifest = {
        "command": command,
        "config": {k: v for k, v in sorted(config.items())},
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "treemax": treemax.__version__,
        },
        "wall_time_s": time.time() - started,
        "outputs": outputs,
        "verdict": verdict,
    }
    if extra:
        manifest.update(extra)
    path = outdir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=1, default=str) + "\n")
    return path
