"""Atomic output writing and run manifests.

Outputs are written to temporary names in the destination directory and
renamed into place, so a crashed run never leaves a truncated report. The
RunManifest records the config hash, tool version, input counts, step
timings and an inventory (size + sha256) of every file the run produced;
reports themselves carry no timestamps, so identical inputs reproduce
identical report bytes.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import time
from pathlib import Path

from retrobench import __version__


def atomic_write_bytes(path: Path | str, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def atomic_write_text(path: Path | str, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def sha256_file(path: Path | str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def config_hash(config: dict) -> str:
    return hashlib.sha256(
        json.dumps(config, sort_keys=True, default=str).encode("utf-8")
    ).hexdigest()


class RunManifest:
    def __init__(self, command: str, config: dict):
        self.command = command
        self._config_hash = config_hash(config)
        self.inputs: dict[str, int] = {}
        self.timings: dict[str, float] = {}
        self.notes: list[str] = []
        self.files: list[dict] = []
        self._timer_start: dict[str, float] = {}

    def record_input(self, name: str, count: int) -> None:
        self.inputs[name] = count

    def note(self, text: str) -> None:
        self.notes.append(text)

    def start(self, step: str) -> None:
        self._timer_start[step] = time.perf_counter()

    def stop(self, step: str) -> None:
        self.timings[step] = round(time.perf_counter() - self._timer_start.pop(step), 6)

    def record_file(self, path: Path | str) -> None:
        path = Path(path)
        self.files.append({
            "name": path.name,
            "bytes": path.stat().st_size,
            "sha256": sha256_file(path),
        })

    def write(self, out_dir: Path | str) -> Path:
        payload = {
            "command": self.command,
            "tool_version": __version__,
            "config_hash": self._config_hash,
            "inputs": self.inputs,
            "timings": self.timings,
            "notes": self.notes,
            "files": sorted(self.files, key=lambda f: f["name"]),
        }
        path = Path(out_dir) / "run_manifest.json"
        atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return path
