"""
Persistence: TAWF binary arrays and CSV report tables.

TAWF layout: magic b"TAWF", u32 version (1), u8 dtype code (1 = float64),
u8 ndim, ndim × u64 dims, then the row-major little-endian payload.
"""

import logging
import struct
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from .errors import ArrayFormatError
from .metrics import contraction_rates
from .reports import ConditionReport, ReconstructionReport, conditions_frame

logger = logging.getLogger(__name__)

MAGIC = b"TAWF"
VERSION = 1
DTYPE_CODES = {1: np.dtype("<f8")}
FLOAT_FORMAT = "%.17g"

PathLike = Union[str, Path]


def write_array(path: PathLike, array: np.ndarray) -> Path:
    """
    Write a float64 array in TAWF format.

    Raises:
        ValueError: If the array cannot be represented as float64
    """
    arr = np.asarray(array)
    if not (np.issubdtype(arr.dtype, np.floating) or np.issubdtype(arr.dtype, np.integer)):
        raise ValueError(f"TAWF stores float64 only, got dtype {arr.dtype}")
    arr = np.ascontiguousarray(arr, dtype="<f8")
    if arr.ndim > 255:
        raise ValueError(f"Too many dimensions: {arr.ndim}")
    header = MAGIC + struct.pack("<IBB", VERSION, 1, arr.ndim)
    header += struct.pack(f"<{arr.ndim}Q", *arr.shape)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(header + arr.tobytes(order="C"))
    return path


def read_array(path: PathLike) -> np.ndarray:
    """
    Read a TAWF array.

    Raises:
        ArrayFormatError: On bad magic, unknown version or dtype, or a truncated payload
    """
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ArrayFormatError(f"bad magic {raw[:4]!r} in {path}")
    if len(raw) < 10:
        raise ArrayFormatError(f"truncated header in {path}")
    version, code, ndim = struct.unpack_from("<IBB", raw, 4)
    if version != VERSION:
        raise ArrayFormatError(f"unsupported version {version} in {path}")
    if code not in DTYPE_CODES:
        raise ArrayFormatError(f"dtype mismatch: code {code} is not float64 in {path}")
    offset = 10 + 8 * ndim
    if len(raw) < offset:
        raise ArrayFormatError(f"truncated dims in {path}")
    dims = struct.unpack_from(f"<{ndim}Q", raw, 10)
    dtype = DTYPE_CODES[code]
    expected = dtype.itemsize * int(np.prod(dims, dtype=np.int64))
    payload = raw[offset:]
    if len(payload) < expected:
        raise ArrayFormatError(f"truncated payload in {path}: {len(payload)} of {expected} bytes")
    if len(payload) > expected:
        raise ArrayFormatError(f"trailing bytes in {path}: {len(payload) - expected} extra")
    return np.frombuffer(payload, dtype=dtype).reshape(dims).astype(np.float64)


def write_csv(df: pd.DataFrame, path: PathLike) -> Path:
    """RFC-4180 CSV with a header row and 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\r\n")
    return path


def read_csv(path: PathLike) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"CSV file not found: {path}")
    return pd.read_csv(path)


def save_conditions(reports: list[ConditionReport], out_dir: PathLike) -> pd.DataFrame:
    """Write conditions.csv (one row per check) and conditions.txt (details)."""
    out = Path(out_dir)
    df = conditions_frame(reports)
    write_csv(df, out / "conditions.csv")
    text = "\n\n".join(r.to_text() for r in reports)
    (out / "conditions.txt").write_text(text + "\n", encoding="utf-8")
    logger.info("wrote %d condition rows to %s", len(df), out)
    return df


def save_reconstruction(report: ReconstructionReport, out_dir: PathLike, name: str = "report.csv") -> pd.DataFrame:
    """Write the iteration history of a reconstruction."""
    df = report.history_frame()
    if len(df):
        df["contraction"] = np.concatenate([[np.nan], contraction_rates(report.residual_history)])
    df["stop_reason"] = report.stop_reason
    df["stability_ratio"] = report.stability_ratio
    df["returned"] = df["iteration"] == (report.best_iteration or report.iterations)
    write_csv(df, Path(out_dir) / name)
    return df


def save_table(rows: Union[pd.DataFrame, pd.Series, list[dict]], out_dir: PathLike, name: str = "report.csv") -> pd.DataFrame:
    """Write rows or a summary Series as a report table."""
    if isinstance(rows, pd.Series):
        df = rows.to_frame().T
    elif isinstance(rows, pd.DataFrame):
        df = rows
    else:
        df = pd.DataFrame(rows)
    write_csv(df, Path(out_dir) / name)
    return df
