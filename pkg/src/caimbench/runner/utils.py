"""Utility functions for caimbench runners."""

import shutil
from pathlib import Path

from loguru import logger

from caimbench.data_models import InsertionPlan


def parse_folds(folds_arg: str | None, n_folds: int) -> list[int]:
    """
    Parse a fold selection argument.

    Supports:
    - None or "all": every fold
    - "2": Single fold
    - "0,3": Multiple folds
    - "1-3": Range

    Args:
        folds_arg: Fold selection string (0-based fold indices)
        n_folds: Number of folds in the protocol

    Returns:
        Sorted list of unique fold indices

    Examples:
        >>> parse_folds("1-3", 5)
        [1, 2, 3]

        >>> parse_folds("3,0,3", 5)
        [0, 3]
    """
    if folds_arg is None or folds_arg.strip() == "all":
        return list(range(n_folds))

    try:
        if "-" in folds_arg:
            start, end = map(int, folds_arg.split("-"))
            if start > end:
                raise ValueError(f"range {start}-{end} is empty")
            folds = list(range(start, end + 1))
        else:
            folds = sorted({int(f.strip()) for f in folds_arg.split(",")})
    except ValueError as e:
        raise ValueError(f"Invalid fold specification '{folds_arg}': {e}") from e

    bad = [f for f in folds if not 0 <= f < n_folds]
    if bad:
        raise ValueError(f"Invalid fold specification '{folds_arg}': folds {bad} outside 0..{n_folds - 1}")
    return folds


def parse_plan(plan_arg: str) -> InsertionPlan:
    """
    Parse an insertion plan argument.

    Supports "none", "2", "1,3,5" and "1-3".

    Examples:
        >>> parse_plan("1-3").positions
        (1, 2, 3)
    """
    text = plan_arg.strip()
    if text in ("", "none"):
        return InsertionPlan(positions=())
    try:
        if "-" in text:
            start, end = map(int, text.split("-"))
            positions = tuple(range(start, end + 1))
        else:
            positions = tuple(int(p.strip()) for p in text.split(","))
    except ValueError as e:
        raise ValueError(f"Invalid insertion plan '{plan_arg}': {e}") from e
    return InsertionPlan(positions=positions)


def prepare_output(directory: Path, force: bool) -> Path:
    """
    Make sure a command's output directory can be written.

    An existing non-empty directory is refused unless ``force`` is set, in
    which case it is removed first.

    Raises:
        FileExistsError: If the directory holds results and ``force`` is False
    """
    if directory.exists() and any(directory.iterdir()):
        if not force:
            raise FileExistsError(f"{directory} already holds results; pass --force to overwrite")
        logger.warning(f"Overwriting {directory}")
        shutil.rmtree(directory)
    directory.mkdir(parents=True, exist_ok=True)
    return directory
