import csv
import json
import logging
import math
import os
import threading
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np

from core.grid.field_io import write_field
from core.grid.grid import ScalarField

MANIFEST_NAME = "failure_manifest.json"


@dataclass(frozen=True)
class Column:
    """
    A CSV column; the header reads ``name [unit] (meaning) {ref}``.

    ``ref`` names the property of the obstacle problem the column verifies.
    """
    name: str
    unit: str = "1"
    meaning: str = ""
    ref: str = ""

    def header(self) -> str:
        label = f"{self.name} [{self.unit}]"
        if self.meaning:
            label = f"{label} ({self.meaning})"
        return f"{label} {{{self.ref}}}" if self.ref else label


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return "nan" if math.isnan(value) else format(value, ".17g")
    return str(value)


class ArtifactStore:
    """
    Writes the files of one run directory.

    Writes are serialized by a lock so presets that solve concurrently can
    share one store. Values are rendered with 17 significant digits and no
    timestamps, so identical runs produce identical files.
    """

    def __init__(self, out_dir: str):
        self.out_dir = os.path.abspath(out_dir)
        self.logger = logging.getLogger("artifacts")
        self.lock = threading.Lock()
        self.written: List[str] = []

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def _register(self, path: str) -> str:
        self.written.append(path)
        self.logger.info(f"Wrote {path}")
        return path

    def write_csv(self, name: str, columns: Sequence[Column], rows: Iterable[Sequence[Any]]) -> str:
        unreferenced = [column.name for column in columns if not column.ref]
        if unreferenced:
            raise ValueError(f"{name}: columns without a reference: {', '.join(unreferenced)}")
        path = self.path(name)
        with self.lock:
            os.makedirs(self.out_dir, exist_ok=True)
            with open(path, "w", newline="", encoding="utf-8") as handle:
                writer = csv.writer(handle)
                writer.writerow([column.header() for column in columns])
                for row in rows:
                    if len(row) != len(columns):
                        raise ValueError(f"{name}: row has {len(row)} cells, header has {len(columns)}")
                    writer.writerow([_cell(value) for value in row])
            return self._register(path)

    def write_field(self, name: str, field: ScalarField) -> str:
        with self.lock:
            return self._register(write_field(self.path(name), field))

    def write_summary(self, name: str, title: str, entries: Dict[str, Any]) -> str:
        """Human-readable ``key: value`` text next to the CSV tables"""
        path = self.path(name)
        width = max((len(key) for key in entries), default=0)
        with self.lock:
            os.makedirs(self.out_dir, exist_ok=True)
            with open(path, "w", encoding="utf-8") as handle:
                handle.write(f"{title}\n{'=' * len(title)}\n")
                for key, value in entries.items():
                    handle.write(f"{key.ljust(width)} : {_cell(value)}\n")
            return self._register(path)

    def discard_manifest(self):
        """Remove the manifest a previous failed run left in this directory"""
        with self.lock:
            if os.path.exists(self.path(MANIFEST_NAME)):
                os.remove(self.path(MANIFEST_NAME))

    def write_manifest(self, payload: Dict[str, Any]) -> str:
        """Machine-readable record of a failed run"""
        path = self.path(MANIFEST_NAME)
        with self.lock:
            os.makedirs(self.out_dir, exist_ok=True)
            with open(path, "w", encoding="utf-8") as handle:
                json.dump(payload, handle, indent=2, sort_keys=True, default=_cell)
                handle.write("\n")
            return self._register(path)
