"""
Rolling-window out-of-sample forecasting on a FRED-MD style monthly panel.

Input layout: row 1 holds the column names (first cell labels the date
column), row 2 the integer transformation codes (date cell ignored), and
every following row one period of data.
"""

import logging
import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import pandas as pd

from app.config.settings import ForecastSettings
from app.models.forecast import (
    ActiveCountRow,
    Dataset,
    ForecastMethod,
    ForecastMetrics,
    ForecastRecord,
    ForecastSummaryRow,
    ScaleSummaryRow,
    Transform,
)
from app.models.lasso import EstimatorKind
from app.services.estimators import LassoEstimator
from app.services.numerics import NotPositiveDefinite, column_stats, ols, sym_eigen
from app.services.tuning_service import TuningService

logger = logging.getLogger(__name__)

# rows lost by each transformation code
TCODE_LOSS = {1: 0, 2: 1, 3: 2, 4: 0, 5: 1, 6: 2, 7: 2}
_LOG_CODES = (4, 5, 6)
_MISSING = {"", "nan", "NaN", "NA", "N/A", "null", "."}
_YEAR = re.compile(r"^\s*(\d{4})")
_LAGGED = re.compile(r"^(.*)_L(\d+)$")


def load_csv(path: str | Path) -> Dataset:
    """
    Read a FRED-MD layout CSV.

    Columns with any missing cell are dropped with a warning.

    Raises:
        ParseError: malformed file, bad transformation code or non-numeric cell
        EmptyDataset: no data rows or no usable columns
    """
    try:
        raw = pd.read_csv(path, header=None, dtype=str, keep_default_na=False, skip_blank_lines=True)
    except pd.errors.EmptyDataError as e:
        raise EmptyDataset(f"{path} is empty") from e
    except (OSError, pd.errors.ParserError) as e:
        raise ParseError(f"Could not read {path}: {e}") from e

    if raw.shape[0] < 3 or raw.shape[1] < 2:
        raise EmptyDataset(f"{path} has no data rows or no value columns")

    names = [str(name).strip() for name in raw.iloc[0, 1:]]
    for col, name in enumerate(names, start=2):
        if not name:
            raise ParseError("Empty column name", row=1, col=col)
    duplicates = [name for name, count in Counter(names).items() if count > 1]
    if duplicates:
        raise ParseError(f"Duplicate column names: {duplicates}", row=1)

    tcodes = []
    for col, cell in enumerate(raw.iloc[1, 1:], start=2):
        try:
            value = float(str(cell).strip())
        except ValueError:
            raise ParseError(f"Transformation code {cell!r} is not an integer", row=2, col=col)
        if not value.is_integer() or not 1 <= value <= 7:
            raise ParseError(f"Transformation code {cell!r} must be an integer in 1..7", row=2, col=col)
        tcodes.append(int(value))

    body = raw.iloc[2:, 1:]
    dates = [str(d).strip() for d in raw.iloc[2:, 0]]
    keep, columns = [], []
    for j, name in enumerate(names):
        cells = body.iloc[:, j].str.strip()
        missing = cells.isin(_MISSING)
        numbers = pd.to_numeric(cells.where(~missing), errors="coerce")
        bad = numbers.isna() & ~missing
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0]) + 3
            raise ParseError(f"Non-numeric value {cells.iloc[row - 3]!r} in column {name}", row=row, col=j + 2)
        if missing.any():
            logger.warning(f"Dropping column {name}: {int(missing.sum())} missing cell(s)")
            continue
        keep.append(j)
        columns.append(numbers.to_numpy(dtype=float))

    if not keep:
        raise EmptyDataset(f"{path} has no column without missing values")
    dataset = Dataset(
        dates=dates,
        names=[names[j] for j in keep],
        tcodes=np.array([tcodes[j] for j in keep]),
        values=np.column_stack(columns),
    )
    logger.info(f"Loaded {path}: {dataset.n_rows} rows, {len(dataset.names)} columns")
    return dataset


def apply_tcode(series: np.ndarray, code: int) -> np.ndarray:
    """
    Stationarizing transformation by code:
    1 level, 2 first difference, 3 second difference, 4 log,
    5 log first difference, 6 log second difference,
    7 first difference of the growth rate w_t / w_{t-1} - 1.

    Raises:
        NonPositiveValue: codes 4-6 on a series with an entry <= 0
    """
    if code not in TCODE_LOSS:
        raise ForecastServiceError(f"Transformation code must be in 1..7, got {code}")
    w = pd.Series(np.asarray(series, dtype=float))
    if code in _LOG_CODES and (w <= 0).any():
        raise NonPositiveValue(f"Transformation code {code} takes logs of a series with values <= 0")
    if code == 7 and (w.iloc[:-1] == 0).any():
        raise NonPositiveValue("Transformation code 7 divides by a zero value")

    if code == 1:
        out = w
    elif code == 2:
        out = w.diff()
    elif code == 3:
        out = w.diff().diff()
    elif code == 4:
        out = np.log(w)
    elif code == 5:
        out = np.log(w).diff()
    elif code == 6:
        out = np.log(w).diff().diff()
    else:
        out = (w / w.shift(1) - 1.0).diff()
    return out.to_numpy()[TCODE_LOSS[code]:]


def rwwd(y: np.ndarray, h: int) -> float:
    """Random walk with drift: y_n + (h / n)(y_n - y_0), n = len(y) - 1."""
    y = np.asarray(y, dtype=float)
    if y.shape[0] < 2:
        raise InsufficientHistory("rwwd needs at least two observations")
    n = y.shape[0] - 1
    return float(y[-1] + h / n * (y[-1] - y[0]))


def ar_bic(y: np.ndarray, h: int, q_max: int) -> tuple[float, int]:
    """
    Direct h-step AR forecast with the lag order chosen by BIC.

    For q = 1..q_max, y_{t+h} is regressed on (1, y_t, ..., y_{t-q+1}) over
    the common sample t = q_max-1 .. N-1-h, so every q is scored on the same
    m observations with BIC = m ln(SSR / m) + (q + 1) ln m. SSR is floored at
    1e-300; the smallest q wins ties.

    Returns:
        Tuple of (prediction for y_{N-1+h}, chosen q)
    """
    y = np.asarray(y, dtype=float)
    N = y.shape[0]
    if q_max < 1 or h < 1:
        raise ForecastServiceError(f"ar_bic needs q_max >= 1 and h >= 1, got {q_max}, {h}")
    if N < q_max + h + 5:
        raise InsufficientHistory(f"ar_bic needs at least {q_max + h + 5} observations, got {N}")

    t = np.arange(q_max - 1, N - h)
    m = t.shape[0]
    lags = np.column_stack([y[t - lag] for lag in range(q_max)])
    target = y[t + h]
    latest = y[N - 1 - np.arange(q_max)]

    best = None
    for q in range(1, q_max + 1):
        try:
            intercept, coef = ols(lags[:, :q], target)
        except NotPositiveDefinite as e:
            logger.debug(f"AR({q}) skipped: {e}")
            continue
        resid = target - intercept - lags[:, :q] @ coef
        ssr = max(float(resid @ resid), 1e-300)
        bic = m * np.log(ssr / m) + (q + 1) * np.log(m)
        if best is None or bic < best[0]:
            best = (bic, q, float(intercept + latest[:q] @ coef))
    if best is None:
        raise ForecastServiceError("No AR order could be estimated")
    return best[2], best[1]


def extract_factors(M: np.ndarray, k: int) -> np.ndarray:
    """
    Principal-component scores of the standardized panel.

    Loadings are eigenvectors of the correlation matrix in decreasing
    eigenvalue order, each signed so its largest-magnitude entry is
    positive. Zero-variance columns contribute nothing.

    Returns:
        n x k matrix of scores
    """
    M = np.asarray(M, dtype=float)
    n, p = M.shape
    if k < 0 or k > min(n, p):
        raise ForecastServiceError(f"k must lie in 0..{min(n, p)}, got {k}")
    means, sds, degenerate = column_stats(M)
    Z = np.where(degenerate, 0.0, (M - means) / np.where(degenerate, 1.0, sds))
    values, vectors = sym_eigen(Z.T @ Z / n)
    loadings = vectors[:, ::-1][:, :k]
    lead = np.argmax(np.abs(loadings), axis=0)
    signs = np.sign(loadings[lead, np.arange(k)])
    loadings = loadings * np.where(signs == 0, 1.0, signs)
    return Z @ loadings


def metrics(records: list[ForecastRecord]) -> ForecastMetrics:
    """RMSPE, MAPE and per-variable selection counts"""
    if not records:
        raise EmptyRecords("metrics needs at least one forecast record")
    errors = np.array([record.error for record in records])
    counts = Counter(name for record in records for name in record.selected)
    return ForecastMetrics(
        rmspe=float(np.sqrt(np.mean(errors**2))),
        mape=float(np.mean(np.abs(errors))),
        count=len(records),
        selection_frequency=dict(sorted(counts.items(), key=lambda item: (-item[1], item[0]))),
    )


def decade_label(date: str) -> str | None:
    match = _YEAR.match(date)
    if not match:
        return None
    return f"{int(match.group(1)) // 10 * 10}s"


class ForecastService:
    """
    Builds the per-window designs and runs the four forecasting methods.
    """

    def __init__(
        self,
        estimator: LassoEstimator,
        tuning: TuningService,
        q_max: int = 12,
        n_factors: int = 4,
        n_lags: int = 4,
        rows_per_year: int = 12,
        jobs: int = 1,
    ):
        self.estimator = estimator
        self.tuning = tuning
        self.q_max = q_max
        self.n_factors = n_factors
        self.n_lags = n_lags
        self.rows_per_year = rows_per_year
        self.jobs = jobs

    @classmethod
    def from_settings(
        cls, estimator: LassoEstimator, tuning: TuningService, settings: ForecastSettings
    ) -> "ForecastService":
        return cls(
            estimator,
            tuning,
            q_max=settings.q_max,
            n_factors=settings.n_factors,
            n_lags=settings.n_lags,
            rows_per_year=settings.rows_per_year,
        )

    def predictor_panel(self, ds: Dataset, target: str, transform: Transform) -> tuple[list[str], np.ndarray, int]:
        """
        Predictors other than ``target``.

        NT keeps raw values. ST transforms every column by its code and trims
        all of them to the shortest common tail.

        Returns:
            Tuple of (names, panel, offset) where panel row i is period offset + i
        """
        if target not in ds.names:
            raise UnknownColumn(f"Target column {target!r} not found")
        names = [name for name in ds.names if name != target]
        if not names:
            raise ForecastServiceError("The dataset has no predictor besides the target")
        if transform == Transform.NT:
            return names, np.column_stack([ds.column(name) for name in names]), 0
        transformed = [apply_tcode(ds.column(name), ds.tcode(name)) for name in names]
        length = min(series.shape[0] for series in transformed)
        return names, np.column_stack([series[-length:] for series in transformed]), ds.n_rows - length

    def window_rows(self, window_years: int) -> int:
        return self.rows_per_year * window_years

    def first_origin(self, ds: Dataset, target: str, window_years: int, transform: Transform) -> int:
        """Earliest origin whose window lies inside the predictor panel"""
        _, _, offset = self.predictor_panel(ds, target, transform)
        return offset + self.window_rows(window_years) - 1

    def design(
        self,
        names: list[str],
        panel: np.ndarray,
        y_window: np.ndarray,
        augmented: bool,
    ) -> tuple[list[str], np.ndarray, int]:
        """
        Regressor rows for one window.

        Without augmentation row i is the predictor vector of window period
        i. With augmentation the unique regressors are the predictors, the
        target and the factor scores of the standardized window panel, each
        entering with lags 0..n_lags-1; rows start at window period n_lags-1.

        Returns:
            Tuple of (column names, design matrix, window period of row 0)
        """
        if not augmented:
            return list(names), panel, 0
        k = min(self.n_factors, *panel.shape)
        factors = extract_factors(panel, k)
        unique = np.column_stack([panel, y_window, factors])
        unique_names = list(names) + ["TARGET"] + [f"F{j + 1}" for j in range(k)]
        L = self.n_lags
        rows = panel.shape[0] - L + 1
        if rows < 2:
            raise InsufficientHistory(f"Window of {panel.shape[0]} rows is too short for {L} lags")
        blocks, labels = [], []
        for lag in range(L):
            blocks.append(unique[L - 1 - lag:L - 1 - lag + rows])
            labels.extend(f"{name}_L{lag}" for name in unique_names)
        return labels, np.hstack(blocks), L - 1

    def forecast_at(
        self,
        ds: Dataset,
        target: str,
        origin: int,
        window_years: int,
        h: int,
        method: ForecastMethod,
        transform: Transform,
        augmented: bool,
        panel: tuple[list[str], np.ndarray, int] | None = None,
    ) -> ForecastRecord:
        """One forecast of y_{origin+h} using rows up to ``origin`` only"""
        R = self.window_rows(window_years)
        start = origin - R + 1
        if start < 0 or origin + h >= ds.n_rows:
            raise InsufficientHistory(f"Origin {origin} with window {R} and h={h} leaves the data")
        y = ds.column(target)
        y_window = y[start:origin + 1]
        selected: list[str] = []
        lam = None

        if method == ForecastMethod.RWWD:
            prediction = rwwd(y_window, h)
        elif method == ForecastMethod.ARBIC:
            prediction, _ = ar_bic(y_window, h, self.q_max)
        else:
            names, matrix, offset = panel or self.predictor_panel(ds, target, transform)
            if start < offset:
                raise InsufficientHistory(f"Window starting at row {start} precedes the predictor panel")
            labels, X, first = self.design(names, matrix[start - offset:origin - offset + 1], y_window, augmented)
            # row i of X belongs to window period first + i; train on pairs with t + h <= origin
            train_rows = X.shape[0] - h
            if train_rows < 2:
                raise InsufficientHistory(f"Window of {R} rows leaves no training pairs at h={h}")
            W_train = X[:train_rows]
            Y_train = y_window[first + h:first + h + train_rows]
            kind = EstimatorKind.PLASSO if method == ForecastMethod.PLASSO else EstimatorKind.SLASSO
            report = self.tuning.cv_select(Y_train, W_train, kind)
            fit = self.estimator.fit(Y_train, W_train, report.chosen_lambda, kind)
            prediction = self.estimator.predict(fit, X[-1])
            selected = [labels[j] for j in fit.active_set]
            lam = report.chosen_lambda

        return ForecastRecord(
            origin=origin,
            horizon=h,
            method=method,
            transform=transform,
            window_years=window_years,
            target_date=ds.dates[origin + h],
            prediction=float(prediction),
            actual=float(y[origin + h]),
            selected=selected,
            lam=lam,
        )

    def rolling_forecast(
        self,
        ds: Dataset,
        target: str,
        window_years: int,
        h: int,
        method: ForecastMethod,
        transform: Transform,
        augmented: bool = False,
        first_origin: int | None = None,
    ) -> list[ForecastRecord]:
        """
        Forecasts from every origin between ``first_origin`` and N-1-h.

        Args:
            ds: dataset
            target: dependent variable, always in levels
            window_years: rolling window length in years
            h: forecast horizon
            method: RWwD, ARBIC, Plasso or Slasso
            transform: NT or ST predictors
            augmented: add lagged target and factors with n_lags lags each
            first_origin: first forecast origin; defaults to the earliest
                admissible one for this window

        Returns:
            Records sorted by origin

        Raises:
            InsufficientHistory: if no origin is admissible
        """
        panel = self.predictor_panel(ds, target, transform)
        earliest = panel[2] + self.window_rows(window_years) - 1
        first = earliest if first_origin is None else first_origin
        if first < earliest:
            raise InsufficientHistory(
                f"A {window_years}-year window needs the first origin at row {earliest} or later, got {first}"
            )
        origins = list(range(first, ds.n_rows - h))
        if not origins:
            raise InsufficientHistory(f"No forecast origin fits a {window_years}-year window at h={h}")

        def one(origin: int) -> ForecastRecord:
            return self.forecast_at(ds, target, origin, window_years, h, method, transform, augmented, panel)

        if self.jobs > 1:
            with ThreadPoolExecutor(max_workers=self.jobs) as pool:
                records = list(pool.map(one, origins))
        else:
            records = [one(origin) for origin in origins]
        logger.info(
            f"{method.value}-{transform.value} h={h} window={window_years}y: {len(records)} forecasts"
        )
        return sorted(records, key=lambda record: (record.origin, record.method.value))

    def run(
        self,
        ds: Dataset,
        target: str,
        window_years: list[int],
        horizons: list[int],
        methods: list[ForecastMethod],
        transforms: list[Transform],
        augmented: bool = False,
        test_start: str | None = None,
    ) -> list[ForecastRecord]:
        """
        Every (window, horizon, method, transform) combination over a common
        testing range. The first target date is ``test_start`` when given,
        otherwise the earliest date every combination admits.
        """
        if test_start is not None and test_start not in ds.dates:
            raise UnknownColumn(f"Test start {test_start!r} is not a date in the dataset")
        earliest_target = max(
            self.first_origin(ds, target, w, t) + h
            for w in window_years
            for t in transforms
            for h in horizons
        )
        if test_start is not None:
            earliest_target = max(earliest_target, ds.dates.index(test_start))

        records: list[ForecastRecord] = []
        for w in window_years:
            for h in horizons:
                for transform in transforms:
                    for method in methods:
                        records.extend(
                            self.rolling_forecast(
                                ds, target, w, h, method, transform, augmented, first_origin=earliest_target - h
                            )
                        )
        return sorted(
            records,
            key=lambda r: (r.window_years, r.horizon, r.origin, r.method.value, r.transform.value),
        )

    def summarize(self, records: list[ForecastRecord]) -> list[ForecastSummaryRow]:
        """RMSPE/MAPE per (h, window, method, transform) for the full sample and each decade"""
        if not records:
            raise EmptyRecords("Nothing to summarize")
        frame = pd.DataFrame(
            {
                "horizon": [r.horizon for r in records],
                "window_years": [r.window_years for r in records],
                "method": [r.method.value for r in records],
                "transform": [r.transform.value for r in records],
                "decade": [decade_label(r.target_date) for r in records],
                "error": [r.error for r in records],
            }
        )
        keys = ["horizon", "window_years", "method", "transform"]
        rows = []
        for key, group in frame.groupby(keys, sort=True):
            rows.append(self._summary_row(key, "full", group["error"]))
            for decade, sub in group.dropna(subset=["decade"]).groupby("decade", sort=True):
                rows.append(self._summary_row(key, decade, sub["error"]))
        return rows

    def selection_by_group(self, records: list[ForecastRecord]) -> dict[str, ForecastMetrics]:
        """Metrics of every LASSO (method, transform, h, window) group, keyed by a readable label"""
        groups: dict[str, list[ForecastRecord]] = {}
        for record in records:
            if record.method.is_lasso:
                label = f"{record.method.value}-{record.transform.value}-h{record.horizon}-w{record.window_years}"
                groups.setdefault(label, []).append(record)
        return {label: metrics(group) for label, group in sorted(groups.items())}

    def regressor_category(self, ds: Dataset, label: str) -> tuple[str, int]:
        """
        TCODE group and lag of a design column label.

        Plain labels are predictor names at lag 0. Augmented labels read
        ``<name>_L<lag>`` where name is a predictor, TARGET or a factor F<j>.
        """
        if label in ds.names:
            return str(ds.tcode(label)), 0
        match = _LAGGED.match(label)
        if match is None:
            raise UnknownColumn(f"Cannot place regressor {label!r}")
        name, lag = match.group(1), int(match.group(2))
        if name == "TARGET":
            return "target", lag
        if name in ds.names:
            return str(ds.tcode(name)), lag
        return "factor", lag

    def active_counts(self, ds: Dataset, records: list[ForecastRecord], augmented: bool) -> list[ActiveCountRow]:
        """
        Mean number of active regressors per LASSO forecast, broken down by
        TCODE (with 'all' for the total) and, for augmented designs, by lag.
        """
        frames = []
        for i, record in enumerate(records):
            if not record.method.is_lasso:
                continue
            key = {
                "forecast": i,
                "horizon": record.horizon,
                "window_years": record.window_years,
                "method": record.method.value,
                "transform": record.transform.value,
            }
            frames.append(pd.DataFrame([{**key, "tcode": None, "lag": None}]))
            if record.selected:
                placed = [self.regressor_category(ds, label) for label in record.selected]
                frames.append(pd.DataFrame([{**key, "tcode": tcode, "lag": lag} for tcode, lag in placed]))
        if not frames:
            return []

        # the placeholder row per forecast keeps forecasts with an empty active set in the denominator
        frame = pd.concat(frames, ignore_index=True)
        keys = ["horizon", "window_years", "method", "transform"]
        tcodes = sorted({t for t in frame["tcode"].dropna()}, key=lambda t: (not t.isdigit(), t))
        breakdowns = [("tcode", "all", None)] + [("tcode", t, ("tcode", t)) for t in tcodes]
        if augmented:
            breakdowns += [("lag", str(lag), ("lag", lag)) for lag in range(self.n_lags)]

        rows = []
        for key, group in frame.groupby(keys, sort=True):
            forecasts = group["forecast"].nunique()
            selected = group.dropna(subset=["tcode"])
            for breakdown, category, column_value in breakdowns:
                if column_value is None:
                    count = len(selected)
                else:
                    column, value = column_value
                    count = int((selected[column] == value).sum())
                horizon, window_years, method, transform = key
                rows.append(
                    ActiveCountRow(
                        horizon=int(horizon),
                        window_years=int(window_years),
                        method=ForecastMethod(method),
                        transform=Transform(transform),
                        breakdown=breakdown,
                        category=category,
                        forecasts=int(forecasts),
                        mean_active=count / forecasts,
                    )
                )
        return rows

    def scale_summary(self, ds: Dataset, target: str) -> list[ScaleSummaryRow]:
        """Sample s.d.s of the predictors per TCODE, with raw (NT) and transformed (ST) values"""
        rows = []
        for transform in Transform:
            names, panel, _ = self.predictor_panel(ds, target, transform)
            _, sds, _ = column_stats(panel)
            frame = pd.DataFrame({"tcode": [str(ds.tcode(name)) for name in names], "sd": sds})
            groups = [("all", frame)] + [
                (tcode, group) for tcode, group in sorted(frame.groupby("tcode"), key=lambda item: int(item[0]))
            ]
            for tcode, group in groups:
                low, high = float(group["sd"].min()), float(group["sd"].max())
                rows.append(
                    ScaleSummaryRow(
                        transform=transform,
                        tcode=tcode,
                        count=len(group),
                        min_sd=low,
                        median_sd=float(group["sd"].median()),
                        max_sd=high,
                        sd_ratio=high / low if low > 0 else None,
                    )
                )
        return rows

    @staticmethod
    def _summary_row(key: tuple, period: str, errors: pd.Series) -> ForecastSummaryRow:
        horizon, window_years, method, transform = key
        values = errors.to_numpy()
        return ForecastSummaryRow(
            horizon=int(horizon),
            window_years=int(window_years),
            method=ForecastMethod(method),
            transform=Transform(transform),
            period=period,
            count=int(values.shape[0]),
            rmspe=float(np.sqrt(np.mean(values**2))),
            mape=float(np.mean(np.abs(values))),
        )


class ForecastServiceError(Exception):
    """Exception raised by the forecasting pipeline"""

    pass


class ParseError(ForecastServiceError):
    """Malformed input file; ``row`` and ``col`` are 1-based file positions"""

    def __init__(self, message: str, row: int | None = None, col: int | None = None):
        location = ", ".join(f"{k} {v}" for k, v in (("row", row), ("column", col)) if v is not None)
        super().__init__(f"{message} ({location})" if location else message)
        self.row = row
        self.col = col


class EmptyDataset(ForecastServiceError):
    """No usable rows or columns"""


class NonPositiveValue(ForecastServiceError):
    """A log transformation met a value <= 0"""


class InsufficientHistory(ForecastServiceError):
    """The data do not cover the requested window"""


class EmptyRecords(ForecastServiceError):
    """No forecast records to evaluate"""


class UnknownColumn(ForecastServiceError):
    """A requested column or date is not in the dataset"""
