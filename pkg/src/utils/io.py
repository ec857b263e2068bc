"""I/O helpers for JSON and CSV files."""

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence


def write_json(data: dict | list, path: Path):
    """Write data to JSON file with pretty formatting."""
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, ensure_ascii=False, indent=2, sort_keys=True)


def read_json(path: Path) -> dict | list:
    """Read JSON file."""
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]):
    """Write rows under a header; floats keep full repr precision."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])


def read_csv(path: Path) -> list[dict[str, str]]:
    """Read a headed CSV file into a list of row dicts."""
    with open(path, encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))
