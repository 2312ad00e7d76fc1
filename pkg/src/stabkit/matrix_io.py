"""Reading and writing matrices as CSV or JSON text.

CSV: one row per line, comma separated. JSON: ``{"n": int, "entries": [...]}``
with entries in row-major order, either flat (length n*n) or nested rows.
"""

import csv
import io
import json
from pathlib import Path

import numpy as np

from .errors import MatrixParseError


def _check(M, what):
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.size == 0:
        raise MatrixParseError(f"{what}: matrix must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise MatrixParseError(f"{what}: non-finite entries")
    return M


def parse_csv(text: str) -> np.ndarray:
    rows = []
    for line in csv.reader(io.StringIO(text)):
        cells = [c.strip() for c in line if c.strip() != ""]
        if not cells or cells[0].startswith("#"):
            continue
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise MatrixParseError(f"csv: {exc}") from None
    if not rows:
        raise MatrixParseError("csv: no data rows")
    if len({len(r) for r in rows}) != 1:
        raise MatrixParseError("csv: ragged rows")
    return _check(np.array(rows, dtype=float), "csv")


def matrix_from_json(obj) -> np.ndarray:
    if isinstance(obj, list):
        obj = {"entries": obj}
    if not isinstance(obj, dict) or "entries" not in obj:
        raise MatrixParseError('json: expected an object with "entries"')
    try:
        entries = np.array(obj["entries"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise MatrixParseError(f"json: {exc}") from None
    n = obj.get("n")
    if n is None:
        if entries.ndim == 2:
            n = entries.shape[0]
        else:
            n = int(round(np.sqrt(entries.size)))
    if not isinstance(n, int) or n <= 0:
        raise MatrixParseError(f"json: invalid dimension n={n!r}")
    if entries.size != n * n:
        raise MatrixParseError(f"json: {entries.size} entries for n={n}")
    if entries.ndim == 2 and entries.shape != (n, n):
        raise MatrixParseError(f"json: nested entries have shape {entries.shape}")
    return _check(entries.reshape(n, n), "json")


def parse_json(text: str) -> np.ndarray:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MatrixParseError(f"json: {exc}") from None
    return matrix_from_json(obj)


def matrix_to_json(M) -> dict:
    M = np.asarray(M)
    if np.iscomplexobj(M):
        return {
            "n": int(M.shape[0]),
            "entries": M.real.ravel().tolist(),
            "entries_imag": M.imag.ravel().tolist(),
        }
    return {"n": int(M.shape[0]), "entries": M.ravel().tolist()}


def load_matrix(path) -> np.ndarray:
    """Load a matrix file; JSON if the suffix or content says so, else CSV."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise MatrixParseError(f"{path}: {exc.strerror}") from None
    if path.suffix.lower() == ".json" or text.lstrip().startswith(("{", "[")):
        return parse_json(text)
    return parse_csv(text)


def save_matrix(M, path):
    path = Path(path)
    M = np.asarray(M, dtype=float)
    if path.suffix.lower() == ".json":
        path.write_text(json.dumps(matrix_to_json(M)))
    else:
        np.savetxt(path, M, delimiter=",", fmt="%.17g")
