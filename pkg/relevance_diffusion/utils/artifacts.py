#!/usr/bin/env python3
"""
Run artifacts: output-directory lock, run manifests and CSV/JSON writers
"""

import os
import csv
import sys
import json
from datetime import datetime, timezone
from dataclasses import dataclass, field, asdict


LOCK_NAME = ".lock"


class OutputDirLock:
    """Exclusive lock file guarding an output directory against concurrent writers"""

    def __init__(self, out_dir):
        self.out_dir = out_dir
        self.path = os.path.join(out_dir, LOCK_NAME)
        self._fd = None

    def __enter__(self):
        os.makedirs(self.out_dir, exist_ok=True)
        try:
            self._fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise RuntimeError(f"Output directory {self.out_dir} is locked by another run ({self.path})")
        os.write(self._fd, str(os.getpid()).encode())
        return self

    def __exit__(self, exc_type, exc, tb):
        os.close(self._fd)
        os.remove(self.path)
        return False


def utc_now():
    return datetime.now(timezone.utc).isoformat()


@dataclass
class RunManifest:
    """Provenance of one CLI command"""
    command: list = field(default_factory=lambda: list(sys.argv))
    config_hash: str = None
    seed: int = None
    started: str = field(default_factory=utc_now)
    finished: str = None
    artifacts: list = field(default_factory=list)
    config: dict = None

    def add(self, path):
        """Record a produced file and return its path"""
        self.artifacts.append(os.path.abspath(path))
        return path

    def write(self, out_dir):
        self.finished = utc_now()
        path = os.path.join(out_dir, "manifest.json")
        self.artifacts.append(os.path.abspath(path))
        write_json(path, asdict(self))
        return path


def write_json(path, data):
    with open(path, 'w') as f:
        json.dump(data, f, indent=2)
    return path


def write_csv(path, header, rows):
    """Write a header plus rows; floats use repr so values round-trip exactly"""
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def _cell(value):
    if value is None:
        return ''
    if isinstance(value, float):
        return repr(float(value))
    return value
