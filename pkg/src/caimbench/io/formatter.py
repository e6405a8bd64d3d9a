"""Report formatting: JSON, CSV and aligned plain-text tables."""

import csv
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path

from loguru import logger
from pydantic import BaseModel

from caimbench.data_models import EpochLoss, EvalReport, FoldReport

Record = Mapping[str, object]

RULE_WIDTH = 70


def _cell(value: object) -> str:
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.2f}"
    return str(value)


def save_json(model: BaseModel, path: str | Path) -> Path:
    """Write a pydantic model as indented JSON."""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(model.model_dump_json(indent=2) + "\n")
    logger.debug(f"Wrote {out}")
    return out


def save_csv(records: Sequence[Record], path: str | Path) -> Path:
    """
    Write records as CSV with a header taken from the first record.

    Raises:
        ValueError: If there are no records
    """
    if not records:
        raise ValueError(f"refusing to write an empty table to {path}")
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    columns = list(records[0])
    with open(out, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for record in records:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in record.items()})
    logger.debug(f"Wrote {len(records)} rows to {out}")
    return out


def save_loss_csv(history: Iterable[EpochLoss], path: str | Path) -> Path:
    """Epoch-loss curve as ``epoch,mean_loss``."""
    return save_csv([{"epoch": h.epoch, "mean_loss": h.mean_loss} for h in history], path)


def save_det_csv(points: Sequence[tuple[float, float]], path: str | Path) -> Path:
    """Raw (FAR, FRR) points as fractions."""
    return save_csv([{"far": far, "frr": frr} for far, frr in points], path)


def format_table(records: Sequence[Record], title: str | None = None) -> str:
    """
    Render records as an aligned text table.

    Floats are printed with two decimals; the column set comes from the first record.
    """
    if not records:
        return f"{title}: (no rows)" if title else "(no rows)"
    columns = list(records[0])
    rows = [[_cell(r.get(c, "")) for c in columns] for r in records]
    widths = [max(len(c), *(len(row[i]) for row in rows)) for i, c in enumerate(columns)]

    def line(cells: Sequence[str]) -> str:
        # First column left-aligned, numbers right-aligned
        return "  ".join(
            cell.ljust(w) if i == 0 else cell.rjust(w) for i, (cell, w) in enumerate(zip(cells, widths, strict=True))
        )

    lines = []
    if title:
        lines.append("=" * RULE_WIDTH)
        lines.append(title)
        lines.append("=" * RULE_WIDTH)
    lines.append(line(columns))
    lines.append("  ".join("-" * w for w in widths))
    lines.extend(line(row) for row in rows)
    return "\n".join(lines)


def summary_records(report: FoldReport) -> list[dict[str, object]]:
    """One record per metric: mean, std and the per-fold values."""
    return [
        {"Metric": name, "Mean": s.mean, "Std": s.std, "Folds": " ".join(f"{v:.2f}" for v in s.values)}
        for name, s in report.metrics.items()
    ]


def format_eval_report(report: EvalReport, verbose: bool = False) -> str:
    """
    Evaluation summary in report column order.

    Args:
        report: Evaluation output
        verbose: Include one line per fold

    Returns:
        Formatted string
    """
    title = f"{report.name}: variant {report.variant}, plan {report.plan}, probes {report.probe_modality}"
    if report.force_source_gate:
        title += ", gate forced to source"
    lines = [format_table(summary_records(report.summary), title)]
    if report.source_identity is not None:
        lines.append(f"Source-path identity: {'yes' if report.source_identity else 'VIOLATED'}")
    if verbose:
        lines.append("")
        lines.extend(str(fold) for fold in report.folds)
    lines.append("=" * RULE_WIDTH)
    return "\n".join(lines)
