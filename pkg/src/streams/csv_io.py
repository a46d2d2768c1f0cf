import logging
from typing import Optional

import numpy as np
import pandas as pd

from src.core.errors import ValidationError
from src.streams.generator import StreamBatch


def _is_number(cell) -> bool:
    try:
        float(cell)
    except (TypeError, ValueError):
        return False
    return True


def load_csv_streams(path: str, first_col: int = 1, last_col: Optional[int] = None) -> StreamBatch:
    """
    Read one stream per column from a comma-separated file.

    Column bounds are 1-based and inclusive, the way columns of a process data
    sheet are usually numbered; the resulting p is logged for the caller. A
    first row holding any non-numeric cell in the selected range is a header.

    Args:
        path (str): CSV file, one row per time step.
        first_col (int): First column to keep (1-based).
        last_col (int, optional): Last column to keep (1-based); defaults to the last column.

    Returns:
        StreamBatch: The selected columns, row order preserved, with no ground truth.
    """
    try:
        frame = pd.read_csv(path, header=None, dtype=str, keep_default_na=False, skip_blank_lines=True)
    except pd.errors.EmptyDataError:
        raise ValidationError(f"{path}: no data rows")
    except pd.errors.ParserError as e:
        raise ValidationError(f"{path}: cannot parse CSV ({e})")
    except OSError as e:
        raise ValidationError(f"{path}: {e}")

    n_cols = frame.shape[1]
    last = n_cols if last_col is None else last_col
    if not 1 <= first_col <= last <= n_cols:
        raise ValidationError(f"{path}: column bounds {first_col}..{last} invalid for {n_cols} columns")
    block = frame.iloc[:, first_col - 1:last]

    line_offset = 1
    if len(block) > 0 and not all(_is_number(cell) for cell in block.iloc[0]):
        block = block.iloc[1:]
        line_offset = 2
    if len(block) == 0:
        raise ValidationError(f"{path}: no data rows")

    numeric = block.apply(pd.to_numeric, errors="coerce")
    values = numeric.to_numpy(dtype=float)
    bad = ~np.isfinite(values)
    if bad.any():
        row, col = map(int, np.argwhere(bad)[0])
        cell = block.iat[row, col]
        raise ValidationError(
            f"{path}: non-numeric value '{cell}' at row {row + line_offset}, column {first_col + col}"
        )

    logging.info(
        f"Loaded {values.shape[0]} rows x {values.shape[1]} streams from {path} (columns {first_col}..{last})"
    )
    return StreamBatch(horizon=values.shape[0], values=values)


def save_csv_streams(batch: StreamBatch, path: str, header: bool = True) -> None:
    """Write a batch in the dialect load_csv_streams reads, at full float precision."""
    columns = [f"x{i}" for i in range(batch.p)]
    frame = pd.DataFrame(batch.values, columns=columns)
    try:
        frame.to_csv(path, index=False, header=header, float_format="%.17g")
    except OSError as e:
        raise ValidationError(f"Cannot write {path}: {e}")
    logging.info(f"Wrote {batch.horizon} rows x {batch.p} streams to {path}")
