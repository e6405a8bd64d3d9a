"""Cross-fold aggregation of metric records."""

from collections.abc import Iterable, Mapping

import numpy as np

from caimbench.data_models import FoldReport, MetricSummary


class FoldAccumulator:
    """
    Collects one metric record per fold.

    Every record must carry the same metric names as the first one.
    """

    def __init__(self) -> None:
        self.records: list[dict[str, float]] = []

    def add(self, record: Mapping[str, float]) -> None:
        """
        Record the metrics of one fold.

        Raises:
            ValueError: If the metric names differ from earlier folds
        """
        if self.records and set(record) != set(self.records[0]):
            raise ValueError(
                f"fold {len(self.records)} reports metrics {list(record)}, "
                f"earlier folds report {list(self.records[0])}"
            )
        self.records.append({k: float(v) for k, v in record.items()})

    def __len__(self) -> int:
        return len(self.records)

    def finalize(self) -> FoldReport:
        """Per-metric mean and sample standard deviation (0 for a single fold)."""
        if not self.records:
            raise ValueError("no folds to aggregate")
        metrics = {}
        for name in self.records[0]:
            values = np.array([r[name] for r in self.records])
            std = float(values.std(ddof=1)) if len(values) > 1 else 0.0
            metrics[name] = MetricSummary(mean=float(values.mean()), std=std, values=values.tolist())
        return FoldReport(n_folds=len(self.records), metrics=metrics)


def aggregate_folds(per_fold: Iterable[Mapping[str, float]]) -> FoldReport:
    accumulator = FoldAccumulator()
    for record in per_fold:
        accumulator.add(record)
    return accumulator.finalize()
