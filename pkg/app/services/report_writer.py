import logging
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import BaseModel

from app.models.diagnostics import DeviationBoundRow, EigenStudyRow, ExpectedDSummary
from app.models.forecast import (
    ActiveCountRow,
    ForecastMetrics,
    ForecastRecord,
    ForecastSummaryRow,
    ScaleSummaryRow,
)
from app.models.simulation import DgpSample, SimulationSummaryRow

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12g"


class ReportWriter:
    """
    Writes run results as CSV files under one output directory.

    Column order follows the model field order and floats are printed with
    a fixed format, so equal inputs give byte-identical files.
    """

    def __init__(self, output_dir: str | Path):
        self.output_dir = Path(output_dir)

    def _write(self, frame: pd.DataFrame, name: str) -> Path:
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
            path = self.output_dir / name
            frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        except OSError as e:
            raise ReportWriterError(f"Failed to write {name} to {self.output_dir}: {e}") from e
        logger.info(f"Wrote {path} ({len(frame)} rows)")
        return path

    @staticmethod
    def _frame(rows: list[BaseModel], model: type[BaseModel]) -> pd.DataFrame:
        columns = list(model.model_fields)
        return pd.DataFrame([row.model_dump(mode="json") for row in rows], columns=columns)

    def simulation_summary(self, rows: list[SimulationSummaryRow]) -> Path:
        return self._write(self._frame(rows, SimulationSummaryRow), "simulation_summary.csv")

    def eigen_study(self, rows: list[EigenStudyRow]) -> Path:
        return self._write(self._frame(rows, EigenStudyRow), "eigen_study.csv")

    def expected_d(self, summary: ExpectedDSummary, D: np.ndarray) -> list[Path]:
        labels = [f"B{j + 1}" for j in range(D.shape[0])]
        matrix = pd.DataFrame(D, columns=labels)
        matrix.insert(0, "row", labels)
        return [
            self._write(self._frame([summary], ExpectedDSummary), "expected_d_summary.csv"),
            self._write(matrix, "expected_d_matrix.csv"),
        ]

    def deviation_bound(self, rows: list[DeviationBoundRow]) -> Path:
        return self._write(self._frame(rows, DeviationBoundRow), "deviation_bound.csv")

    def forecast_records(self, records: list[ForecastRecord]) -> Path:
        frame = pd.DataFrame(
            {
                "origin": [r.origin for r in records],
                "target_date": [r.target_date for r in records],
                "horizon": [r.horizon for r in records],
                "window_years": [r.window_years for r in records],
                "method": [r.method.value for r in records],
                "transform": [r.transform.value for r in records],
                "prediction": [r.prediction for r in records],
                "actual": [r.actual for r in records],
                "error": [r.error for r in records],
                "lambda": [r.lam for r in records],
                "selected": [";".join(r.selected) for r in records],
            }
        )
        return self._write(frame, "forecast_records.csv")

    def selection_frequency(self, groups: dict[str, ForecastMetrics]) -> Path:
        """One row per (group, variable), most frequently selected first"""
        rows = [
            {"group": group, "variable": name, "count": count, "share": count / metrics.count}
            for group, metrics in groups.items()
            for name, count in metrics.selection_frequency.items()
        ]
        return self._write(pd.DataFrame(rows, columns=["group", "variable", "count", "share"]), "selection_frequency.csv")

    def forecast_summary(self, rows: list[ForecastSummaryRow]) -> Path:
        return self._write(self._frame(rows, ForecastSummaryRow), "forecast_summary.csv")

    def active_counts(self, rows: list[ActiveCountRow]) -> Path:
        return self._write(self._frame(rows, ActiveCountRow), "active_counts.csv")

    def scale_summary(self, rows: list[ScaleSummaryRow]) -> Path:
        return self._write(self._frame(rows, ScaleSummaryRow), "scale_summary.csv")

    def sample(self, sample: DgpSample, stem: str = "sample") -> list[Path]:
        """Y and W with column labels, plus a truth sidecar with theta* and column kinds"""
        data = pd.DataFrame(sample.w, columns=sample.column_labels)
        data.insert(0, "y", sample.y)
        truth = pd.DataFrame(
            {
                "column": sample.column_labels,
                "kind": [kind.value for kind in sample.column_kinds],
                "theta": sample.theta_true,
                "next_regressor": sample.next_regressors,
            }
        )
        return [self._write(data, f"{stem}.csv"), self._write(truth, f"{stem}_truth.csv")]


class ReportWriterError(Exception):
    """Exception raised by ReportWriter"""

    pass
