from dataclasses import asdict, is_dataclass
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence
import csv
import json
import logging

import numpy as np

from condensation_quantizer.words import Word


#
# Serialization
#

def _convert_to_serializable(obj: Any) -> Any:
    """Convert analysis objects to JSON serializable formats"""
    if isinstance(obj, Fraction):
        return str(obj)
    elif isinstance(obj, Word):
        return obj.to_list()
    elif isinstance(obj, Enum):
        return obj.value
    elif isinstance(obj, Path):
        return str(obj)
    elif isinstance(obj, np.ndarray):
        return [_convert_to_serializable(v) for v in obj.tolist()]
    elif isinstance(obj, np.integer):
        return int(obj)
    elif isinstance(obj, np.floating):
        return float(obj)
    elif hasattr(obj, 'to_dict'):
        return _convert_to_serializable(obj.to_dict())
    elif is_dataclass(obj) and not isinstance(obj, type):
        return _convert_to_serializable(asdict(obj))
    elif isinstance(obj, dict):
        return {str(k): _convert_to_serializable(v) for k, v in obj.items()}
    elif isinstance(obj, (list, tuple, set, frozenset)):
        return [_convert_to_serializable(v) for v in obj]
    return obj


def _format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(_convert_to_serializable(value))


#
# Report Output
#

def save_json(data: Any, output_dir: Path, name: str) -> Path:
    """Write ``data`` as sorted, indented JSON"""
    output_dir.mkdir(parents=True, exist_ok=True)
    output_file = output_dir / name
    with open(output_file, 'w', encoding='utf-8') as f:
        json.dump(_convert_to_serializable(data), f, indent=2, sort_keys=True)
        f.write("\n")
    return output_file


def save_csv(rows: Iterable[Dict[str, Any]], columns: Sequence[str], output_dir: Path, name: str) -> Path:
    """Write rows with a fixed column order; floats keep full precision"""
    output_dir.mkdir(parents=True, exist_ok=True)
    output_file = output_dir / name
    with open(output_file, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row.get(column)) for column in columns])
    return output_file


def save_codebook_csv(points: Sequence[float], output_dir: Path, name: str) -> Path:
    """One code point per row under an ``a`` header"""
    output_dir.mkdir(parents=True, exist_ok=True)
    output_file = output_dir / name
    np.savetxt(output_file, np.asarray(points, dtype=float), fmt='%.17g', header='a', comments='')
    return output_file


def save_manifest(manifest: Dict[str, Any], output_dir: Path) -> Path:
    return save_json(manifest, output_dir, "manifest.json")


def error_payload(error: BaseException, command: Optional[str]) -> Dict[str, Any]:
    """Machine-readable error record"""
    code = getattr(error, 'code', None)
    if not isinstance(code, str):
        if isinstance(error, FileNotFoundError):
            code = "file_not_found"
        elif isinstance(error, ValueError):
            code = "invalid_argument"
        else:
            code = "error"
    return {'error': code, 'message': str(error), 'command': command}


def save_error(error: BaseException, command: Optional[str], output_dir: Path,
               logger: logging.Logger) -> Dict[str, Any]:
    payload = error_payload(error, command)
    try:
        save_json(payload, output_dir, "error.json")
    except OSError as e:
        logger.error(f"Failed to write error.json: {e}")
    return payload


#
# Display
#

def print_summary(title: str, values: Dict[str, Any]) -> None:
    """Print a titled key/value block"""
    print(f"\n{title}")
    print("=" * len(title))
    width = max((len(key) for key in values), default=0)
    for key, value in values.items():
        print(f"{key.ljust(width)}  {_format_cell(value)}")
    print()


def print_comparison(rows: List[Dict[str, Any]]) -> None:
    """Expected-versus-computed table"""
    headers = ["quantity", "expected", "computed", "match"]
    table = [[_format_cell(row.get(h)) for h in headers] for row in rows]
    widths = [max(len(h), *(len(line[i]) for line in table)) if table else len(h)
              for i, h in enumerate(headers)]
    print("  ".join(h.ljust(w) for h, w in zip(headers, widths)))
    print("  ".join("-" * w for w in widths))
    for line in table:
        print("  ".join(cell.ljust(w) for cell, w in zip(line, widths)))
