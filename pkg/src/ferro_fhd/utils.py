import csv
import json
import os
from typing import Any, Iterable, List, Sequence

from .constants import FLOAT_DIGITS, SCIENTIFIC_BELOW


def format_float(value: float) -> str:
    """
    Format a number for CSV output.

    Six significant digits; lowercase scientific notation for 0 < |x| < 1e-3.
    """
    value = float(value)
    if 0.0 < abs(value) < SCIENTIFIC_BELOW:
        return f"{value:.{FLOAT_DIGITS - 1}e}"
    return f"{value:.{FLOAT_DIGITS}g}"


def _format_cell(value: Any) -> str:
    if isinstance(value, bool) or isinstance(value, (int, str)):
        return str(value)
    return format_float(value)


def ensure_dir(path: str) -> None:
    """Create the directory (and parents) if it does not exist."""
    if path:
        os.makedirs(path, exist_ok=True)


def save_csv(filepath: str, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """
    Save rows to a CSV file with deterministic float formatting.

    Args:
        filepath: Path to the CSV file
        header: Column names
        rows: Rows of numbers or strings

    Returns:
        The path written
    """
    ensure_dir(os.path.dirname(filepath))
    with open(filepath, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(value) for value in row])
    return filepath


def load_csv(filepath: str) -> List[List[str]]:
    """Load a CSV file as a list of string rows (header included)."""
    with open(filepath, 'r', encoding='utf-8', newline='') as f:
        return list(csv.reader(f))


def save_json(filepath: str, data: Any) -> str:
    """
    Save data to a JSON file.

    Args:
        filepath: Path to the JSON file
        data: JSON-serializable data

    Returns:
        The path written
    """
    ensure_dir(os.path.dirname(filepath))
    with open(filepath, 'w', encoding='utf-8') as f:
        json.dump(data, f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write('\n')
    return filepath


def load_json(filepath: str) -> Any:
    """Load data from a JSON file."""
    with open(filepath, 'r', encoding='utf-8') as f:
        return json.load(f)
