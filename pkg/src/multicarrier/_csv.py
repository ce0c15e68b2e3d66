"""CSV writing with a fixed number format (LF endings, '.' decimal)."""

import json

import numpy as np


def fmt(value) -> str:
    """Shortest round-trip text for a number; integers stay integral."""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return repr(float(value))


def write_csv(path, header, rows) -> None:
    """Write ``rows`` (iterables of numbers/strings) under ``header``."""
    with open(path, "w", newline="\n", encoding="ascii") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_sidecar(path, params: dict) -> None:
    """Write run parameters as sorted JSON next to a CSV."""
    clean = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in params.items()}
    with open(path, "w", newline="\n", encoding="ascii") as fh:
        json.dump(clean, fh, sort_keys=True, indent=2, default=str)
        fh.write("\n")
