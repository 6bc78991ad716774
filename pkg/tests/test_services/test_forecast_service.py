import numpy as np
import pytest

from app.models.forecast import Dataset, ForecastMethod, ForecastRecord, Transform
from app.services.forecast_service import (
    EmptyDataset,
    EmptyRecords,
    InsufficientHistory,
    NonPositiveValue,
    ParseError,
    UnknownColumn,
    apply_tcode,
    ar_bic,
    decade_label,
    extract_factors,
    load_csv,
    metrics,
    rwwd,
)


def replace_after(ds: Dataset, row: int, rng) -> Dataset:
    values = ds.values.copy()
    values[row + 1:] = np.abs(values[row + 1:]) * 1.5 + rng.random(values[row + 1:].shape)
    return Dataset(dates=ds.dates, names=ds.names, tcodes=ds.tcodes, values=values)


class TestTransforms:
    def test_codes(self):
        w = np.array([1.0, 3.0, 6.0, 10.0])
        np.testing.assert_allclose(apply_tcode(w, 1), w)
        np.testing.assert_allclose(apply_tcode(w, 2), [2.0, 3.0, 4.0])
        np.testing.assert_allclose(apply_tcode(w, 3), [1.0, 1.0])
        np.testing.assert_allclose(apply_tcode(w, 4), np.log(w))
        np.testing.assert_allclose(apply_tcode(np.exp([0.0, 1.0, 3.0]), 5), [1.0, 2.0])
        np.testing.assert_allclose(apply_tcode(np.exp([0.0, 1.0, 3.0, 6.0]), 6), [1.0, 1.0])
        np.testing.assert_allclose(apply_tcode(np.array([1.0, 2.0, 6.0]), 7), [2.0])

    def test_difference_inverts_by_cumulating(self, rng):
        w = np.cumsum(rng.standard_normal(50))
        recovered = w[0] + np.concatenate([[0.0], np.cumsum(apply_tcode(w, 2))])
        np.testing.assert_allclose(recovered, w, atol=1e-12)

    def test_log_difference_inverts_by_exponentiating(self, rng):
        w = 100.0 * np.exp(np.cumsum(0.01 * rng.standard_normal(200)))
        recovered = w[0] * np.exp(np.concatenate([[0.0], np.cumsum(apply_tcode(w, 5))]))
        np.testing.assert_allclose(recovered, w, rtol=1e-10)

    def test_log_of_nonpositive(self):
        with pytest.raises(NonPositiveValue):
            apply_tcode(np.array([1.0, 0.0, 2.0]), 5)


class TestBenchmarks:
    def test_rwwd(self):
        assert rwwd(np.array([1.0, 2.0, 4.0]), 2) == pytest.approx(7.0)
        with pytest.raises(InsufficientHistory):
            rwwd(np.array([1.0]), 1)

    @pytest.mark.parametrize("h", [1, 2])
    def test_ar_bic_single_lag_is_ols(self, rng, h):
        y = np.zeros(80)
        for t in range(1, 80):
            y[t] = 1.0 + 0.6 * y[t - 1] + rng.standard_normal()
        prediction, q = ar_bic(y, h, 1)
        slope, intercept = np.polyfit(y[:-h], y[h:], 1)
        assert q == 1
        assert prediction == pytest.approx(intercept + slope * y[-1], rel=1e-8)

    def test_ar_bic_picks_true_order(self, rng):
        y = np.zeros(600)
        for t in range(2, 600):
            y[t] = 0.5 * y[t - 1] + 0.3 * y[t - 2] + rng.standard_normal()
        _, q = ar_bic(y, 1, 4)
        assert q == 2

    def test_ar_bic_short_series(self):
        with pytest.raises(InsufficientHistory):
            ar_bic(np.arange(8.0), 1, 4)


class TestFactors:
    def test_first_factor_tracks_common_component(self, rng):
        f = rng.standard_normal(200)
        M = np.outer(f, rng.uniform(1.0, 2.0, 12)) + 0.1 * rng.standard_normal((200, 12))
        scores = extract_factors(M, 3)
        assert scores.shape == (200, 3)
        assert abs(np.corrcoef(scores[:, 0], f)[0, 1]) > 0.95
        cross = scores.T @ scores / 200
        np.testing.assert_allclose(cross - np.diag(np.diag(cross)), 0.0, atol=1e-8)

    def test_constant_column_is_ignored(self, rng):
        M = rng.standard_normal((50, 4))
        M[:, 2] = 3.0
        assert np.all(np.isfinite(extract_factors(M, 2)))

    def test_sign_convention(self, rng):
        M = rng.standard_normal((60, 5))
        np.testing.assert_allclose(extract_factors(-M, 2), -extract_factors(M, 2), atol=1e-10)


class TestLoadCsv:
    def test_planted_layout(self, planted_csv):
        ds = load_csv(planted_csv)
        assert ds.names == ["A", "B", "C", "TARGET"]
        assert ds.tcodes.tolist() == [2, 5, 1, 2]
        assert ds.n_rows == 150
        assert ds.dates[0] == "1995-01-01"

    def test_missing_column_dropped(self, tmp_path):
        path = tmp_path / "gaps.csv"
        path.write_text("sasdate,A,B\nTransform:,1,2\n2000-01-01,1,\n2000-02-01,2,3\n", encoding="utf-8")
        ds = load_csv(path)
        assert ds.names == ["A"]

    def test_bad_tcode(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("sasdate,A\nTransform:,9\n2000-01-01,1\n", encoding="utf-8")
        with pytest.raises(ParseError) as info:
            load_csv(path)
        assert info.value.row == 2
        assert info.value.col == 2

    def test_non_numeric_cell(self, tmp_path):
        path = tmp_path / "text.csv"
        path.write_text("sasdate,A,B\nTransform:,1,1\n2000-01-01,1,2\n2000-02-01,x,3\n", encoding="utf-8")
        with pytest.raises(ParseError) as info:
            load_csv(path)
        assert (info.value.row, info.value.col) == (4, 2)

    def test_no_rows(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("sasdate,A\nTransform:,1\n", encoding="utf-8")
        with pytest.raises(EmptyDataset):
            load_csv(path)


class TestMetrics:
    def records(self):
        common = {"horizon": 1, "method": ForecastMethod.SLASSO, "transform": Transform.NT, "window_years": 5}
        return [
            ForecastRecord(origin=0, prediction=1.0, actual=2.0, selected=["A", "B"], **common),
            ForecastRecord(origin=1, prediction=1.0, actual=-2.0, selected=["A"], **common),
        ]

    def test_values(self):
        result = metrics(self.records())
        assert result.rmspe == pytest.approx(np.sqrt(5.0))
        assert result.mape == pytest.approx(2.0)
        assert result.count == 2
        assert list(result.selection_frequency.items()) == [("A", 2), ("B", 1)]

    def test_empty(self):
        with pytest.raises(EmptyRecords):
            metrics([])

    def test_decade_label(self):
        assert decade_label("1987-03-01") == "1980s"
        assert decade_label("3/1/1987") is None


class TestRollingForecast:
    def test_benchmarks_delegate_to_window(self, forecast_service, planted_csv):
        ds = load_csv(planted_csv)
        y = ds.column("TARGET")
        for method in (ForecastMethod.RWWD, ForecastMethod.ARBIC):
            records = forecast_service.rolling_forecast(ds, "TARGET", 5, 2, method, Transform.NT)
            assert [r.origin for r in records] == list(range(59, 148))
            for record in records[::20]:
                window = y[record.origin - 59:record.origin + 1]
                expected = rwwd(window, 2) if method == ForecastMethod.RWWD else ar_bic(window, 2, 4)[0]
                assert record.prediction == pytest.approx(expected)
                assert record.actual == y[record.origin + 2]

    def test_planted_predictor_is_selected(self, forecast_service, planted_csv):
        ds = load_csv(planted_csv)
        slasso = forecast_service.rolling_forecast(ds, "TARGET", 5, 1, ForecastMethod.SLASSO, Transform.NT)
        rw = forecast_service.rolling_forecast(ds, "TARGET", 5, 1, ForecastMethod.RWWD, Transform.NT)
        share = np.mean(["A" in record.selected for record in slasso])
        assert share >= 0.9
        assert metrics(slasso).rmspe < metrics(rw).rmspe

    @pytest.mark.parametrize("transform", list(Transform))
    @pytest.mark.parametrize("augmented", [False, True])
    def test_no_look_ahead(self, forecast_service, planted_csv, rng, transform, augmented):
        ds = load_csv(planted_csv)
        origin = 100
        before = forecast_service.forecast_at(
            ds, "TARGET", origin, 5, 1, ForecastMethod.SLASSO, transform, augmented
        )
        after = forecast_service.forecast_at(
            replace_after(ds, origin, rng), "TARGET", origin, 5, 1, ForecastMethod.SLASSO, transform, augmented
        )
        assert before.prediction == after.prediction
        assert before.selected == after.selected

    def test_first_origin_too_early(self, forecast_service, planted_csv):
        ds = load_csv(planted_csv)
        with pytest.raises(InsufficientHistory):
            forecast_service.rolling_forecast(
                ds, "TARGET", 5, 1, ForecastMethod.RWWD, Transform.ST, first_origin=59
            )

    def test_window_longer_than_data(self, forecast_service, planted_csv):
        ds = load_csv(planted_csv)
        with pytest.raises(InsufficientHistory):
            forecast_service.rolling_forecast(ds, "TARGET", 20, 1, ForecastMethod.RWWD, Transform.NT)


class TestDesign:
    def test_augmented_width(self, forecast_service, rng):
        names = [f"P{j}" for j in range(10)]
        panel = np.cumsum(rng.standard_normal((60, 10)), axis=0)
        y_window = rng.standard_normal(60)
        labels, X, first = forecast_service.design(names, panel, y_window, augmented=True)
        assert X.shape == (57, 60)
        assert len(labels) == 60
        assert first == 3
        assert labels[:2] == ["P0_L0", "P1_L0"]
        assert "TARGET_L3" in labels and "F4_L0" in labels
        np.testing.assert_array_equal(X[:, labels.index("P0_L1")], panel[2:59, 0])
        np.testing.assert_array_equal(X[:, labels.index("TARGET_L0")], y_window[3:])

    def test_plain_design_is_the_panel(self, forecast_service, rng):
        panel = rng.standard_normal((20, 3))
        labels, X, first = forecast_service.design(["a", "b", "c"], panel, np.zeros(20), augmented=False)
        assert labels == ["a", "b", "c"]
        assert X is panel
        assert first == 0


class TestRun:
    def test_common_testing_range_and_summary(self, forecast_service, planted_csv):
        ds = load_csv(planted_csv)
        records = forecast_service.run(
            ds, "TARGET", [1], [1, 2], [ForecastMethod.RWWD, ForecastMethod.ARBIC], [Transform.NT]
        )
        by_group = {}
        for record in records:
            by_group.setdefault((record.horizon, record.method), []).append(record.target_date)
        dates = list(by_group.values())
        assert len(dates) == 4
        assert all(d == dates[0] for d in dates)
        assert dates[0][0] == ds.dates[13]

        rows = forecast_service.summarize(records)
        full = [row for row in rows if row.period == "full"]
        assert len(full) == 4
        for row in full:
            decades = [
                r for r in rows
                if r.period != "full" and (r.horizon, r.method, r.transform) == (row.horizon, row.method, row.transform)
            ]
            assert {r.period for r in decades} == {"1990s", "2000s"}
            assert sum(r.count for r in decades) == row.count

    def test_test_start(self, forecast_service, planted_csv):
        ds = load_csv(planted_csv)
        records = forecast_service.run(
            ds, "TARGET", [5], [1], [ForecastMethod.RWWD], [Transform.NT], test_start="2003-01-01"
        )
        assert records[0].target_date == "2003-01-01"
        assert records[0].origin == 95

    def test_selection_groups_only_lasso(self, forecast_service, planted_csv):
        ds = load_csv(planted_csv)
        records = forecast_service.run(
            ds, "TARGET", [10], [1], [ForecastMethod.RWWD, ForecastMethod.PLASSO], [Transform.NT]
        )
        groups = forecast_service.selection_by_group(records)
        assert list(groups) == ["Plasso-NT-h1-w10"]
        assert groups["Plasso-NT-h1-w10"].count == 150 - 120

    def test_unknown_target(self, forecast_service, planted_csv):
        ds = load_csv(planted_csv)
        with pytest.raises(UnknownColumn):
            forecast_service.run(ds, "NOPE", [5], [1], [ForecastMethod.PLASSO], [Transform.NT])

    def test_empty_summary(self, forecast_service):
        with pytest.raises(EmptyRecords):
            forecast_service.summarize([])


def lasso_record(method: ForecastMethod, selected: list[str], origin: int = 80) -> ForecastRecord:
    return ForecastRecord(
        origin=origin,
        horizon=1,
        method=method,
        transform=Transform.NT,
        window_years=5,
        prediction=0.0,
        actual=0.0,
        selected=selected,
    )


class TestSelectionBreakdown:
    def test_counts_by_tcode(self, forecast_service, planted_csv):
        ds = load_csv(planted_csv)
        records = [
            lasso_record(ForecastMethod.SLASSO, ["A", "C"]),
            lasso_record(ForecastMethod.SLASSO, [], origin=81),
            lasso_record(ForecastMethod.PLASSO, ["B"]),
            lasso_record(ForecastMethod.RWWD, []),
        ]
        rows = forecast_service.active_counts(ds, records, augmented=False)
        table = {(row.method.value, row.category): row.mean_active for row in rows}
        assert {row.breakdown for row in rows} == {"tcode"}
        assert [row.category for row in rows if row.method == ForecastMethod.SLASSO] == ["all", "1", "2", "5"]
        assert table[("Slasso", "all")] == 1.0
        assert table[("Slasso", "1")] == 0.5
        assert table[("Slasso", "2")] == 0.5
        assert table[("Slasso", "5")] == 0.0
        assert table[("Plasso", "5")] == 1.0
        assert all(row.forecasts == (2 if row.method == ForecastMethod.SLASSO else 1) for row in rows)

    def test_counts_by_lag(self, forecast_service, planted_csv):
        ds = load_csv(planted_csv)
        records = [lasso_record(ForecastMethod.SLASSO, ["A_L0", "TARGET_L1", "F1_L0", "C_L3"])]
        rows = forecast_service.active_counts(ds, records, augmented=True)
        by_tcode = {row.category: row.mean_active for row in rows if row.breakdown == "tcode"}
        by_lag = {row.category: row.mean_active for row in rows if row.breakdown == "lag"}
        assert by_tcode == {"all": 4.0, "1": 1.0, "2": 1.0, "factor": 1.0, "target": 1.0}
        assert by_lag == {"0": 2.0, "1": 1.0, "2": 0.0, "3": 1.0}

    def test_no_lasso_records(self, forecast_service, planted_csv):
        ds = load_csv(planted_csv)
        assert forecast_service.active_counts(ds, [lasso_record(ForecastMethod.RWWD, [])], augmented=False) == []

    def test_unplaceable_label(self, forecast_service, planted_csv):
        with pytest.raises(UnknownColumn):
            forecast_service.regressor_category(load_csv(planted_csv), "NOPE")


class TestScaleSummary:
    def test_sds_by_tcode(self, forecast_service, planted_csv):
        ds = load_csv(planted_csv)
        rows = forecast_service.scale_summary(ds, "TARGET")
        table = {(row.transform, row.tcode): row for row in rows}
        assert [row.tcode for row in rows if row.transform == Transform.NT] == ["all", "1", "2", "5"]
        assert table[(Transform.NT, "all")].count == 3
        B = ds.column("B")
        assert table[(Transform.NT, "5")].max_sd == pytest.approx(np.std(B))
        assert table[(Transform.ST, "5")].max_sd == pytest.approx(np.std(apply_tcode(B, 5)))
        assert table[(Transform.ST, "5")].max_sd < table[(Transform.NT, "5")].max_sd
        assert table[(Transform.NT, "all")].sd_ratio == pytest.approx(
            table[(Transform.NT, "all")].max_sd / table[(Transform.NT, "all")].min_sd
        )
