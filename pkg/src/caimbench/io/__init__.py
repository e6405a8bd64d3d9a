"""caimbench I/O utilities.

Binary checkpoints and report formatting.
"""

from caimbench.io.checkpoint import (
    FORMAT_VERSION,
    MAGIC,
    Checkpoint,
    load_checkpoint,
    save_checkpoint,
    validate_names,
)
from caimbench.io.formatter import (
    format_eval_report,
    format_table,
    save_csv,
    save_det_csv,
    save_json,
    save_loss_csv,
    summary_records,
)

__all__ = [
    "MAGIC",
    "FORMAT_VERSION",
    "Checkpoint",
    "save_checkpoint",
    "load_checkpoint",
    "validate_names",
    "save_json",
    "save_csv",
    "save_loss_csv",
    "save_det_csv",
    "format_table",
    "format_eval_report",
    "summary_records",
]
