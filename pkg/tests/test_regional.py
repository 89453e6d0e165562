import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowregion.dataio import STATIC_ATTRIBUTES, CatchmentRecord
from flowregion.engine import FEATURE_NAMES, FeatureVector
from flowregion.errors import BadK, ConstantVector, LengthMismatch
from flowregion.forest import ForestParams
from flowregion.regional import (
    ALL_PREDICTORS,
    GROUP_NAMES,
    average_ranks,
    correlation_matrix,
    cross_validate,
    evaluate_all,
    feature_summary,
    group_columns,
    importance_all,
    kfold_split,
    predictor_matrix,
    rmse,
    spearman,
    target_vector,
    write_correlations,
    write_evaluation,
    write_importance,
    write_pred_vs_obs,
    write_summaries,
    read_evaluation,
)

INTEGER_IDX = [FEATURE_NAMES.index(n)
               for n in ("firstzero_ac", "crossing_points", "flat_spots", "peak", "trough")]


def random_vector(rng):
    values = rng.normal(size=28)
    values[INTEGER_IDX] = rng.integers(1, 50, size=5)
    return FeatureVector(values)


def synthetic_records(n, seed=0, link=None):
    """Records with random features; ``link`` may rewrite streamflow values."""
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        static = {a: float(rng.normal()) for a in STATIC_ATTRIBUTES}
        temperature = random_vector(rng)
        precipitation = random_vector(rng)
        streamflow = random_vector(rng)
        if link is not None:
            values = streamflow.values.copy()
            link(values, precipitation, rng)
            streamflow = FeatureVector(values)
        records.append(CatchmentRecord(f"c{i:03d}", static, temperature,
                                       precipitation, streamflow))
    return records


def brute_force_spearman(x, y):
    def ranks(v):
        order = sorted(range(len(v)), key=lambda i: v[i])
        out = [0.0] * len(v)
        i = 0
        while i < len(v):
            j = i
            while j + 1 < len(v) and v[order[j + 1]] == v[order[i]]:
                j += 1
            avg = (i + j) / 2 + 1
            for k in range(i, j + 1):
                out[order[k]] = avg
            i = j + 1
        return np.asarray(out)

    rx, ry = ranks(list(x)), ranks(list(y))
    return float(np.corrcoef(rx, ry)[0, 1])


class TestSpearman:
    def test_monotone_is_one(self):
        assert spearman([1, 2, 3], [2, 4, 9]) == pytest.approx(1.0)

    def test_rank_difference_formula(self):
        # sum d^2 = 6 -> 1 - 6*6 / (3 * 8) = -0.5
        assert spearman([1, 2, 3], [3, 1, 2]) == pytest.approx(-0.5)

    def test_antisymmetry(self, rng):
        x = rng.normal(size=20)
        assert spearman(x, -x) == pytest.approx(-1.0)

    def test_constant_vector(self):
        with pytest.raises(ConstantVector):
            spearman([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            spearman([1.0, 2.0], [1.0, 2.0, 3.0])

    def test_matches_brute_force_with_ties(self, rng):
        for _ in range(100):
            n = int(rng.integers(3, 40))
            x = rng.integers(0, 6, size=n).astype(float)  # heavy ties
            y = rng.integers(0, 6, size=n).astype(float)
            if np.ptp(x) == 0 or np.ptp(y) == 0:
                continue
            assert spearman(x, y) == pytest.approx(brute_force_spearman(x, y),
                                                   abs=1e-10)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25)
    def test_increasing_transform_invariance(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=15)
        y = rng.normal(size=15)
        a = spearman(x, y)
        b = spearman(np.exp(x), y**3)
        assert a == pytest.approx(b, abs=1e-12)

    def test_average_ranks_with_ties(self):
        np.testing.assert_allclose(average_ranks([10.0, 20.0, 20.0, 30.0]),
                                   [1.0, 2.5, 2.5, 4.0])


class TestGroups:
    def test_column_counts(self):
        expected = {"S": 19, "T": 28, "P": 28, "ST": 47, "SP": 47, "TP": 56,
                    "STP": 75}
        for name, count in expected.items():
            assert len(group_columns(name)) == count

    def test_all_predictors_count(self):
        assert len(ALL_PREDICTORS) == 75

    def test_matrix_assembly(self):
        records = synthetic_records(5, seed=1)
        X = predictor_matrix(records, group_columns("STP"))
        assert X.shape == (5, 75)
        assert X[2, 0] == records[2].static["log_elev_mean"]
        t_col = group_columns("STP").index("temperature_x_acf1")
        assert X[3, t_col] == records[3].temperature["x_acf1"]


class TestCorrelationMatrix:
    def test_shape(self):
        matrix = correlation_matrix(synthetic_records(12, seed=2))
        assert matrix.rho.shape == (75, 28)

    def test_identical_column_gives_one(self):
        def link(values, precipitation, rng):
            values[0] = precipitation["x_acf1"]  # duplicate a predictor

        matrix = correlation_matrix(synthetic_records(12, seed=3, link=link))
        i = matrix.predictors.index("precipitation_x_acf1")
        assert matrix.rho[i, 0] == pytest.approx(1.0)

    def test_constant_column_is_undefined_marker(self):
        def link(values, precipitation, rng):
            values[5] = 7.0  # constant target column

        matrix = correlation_matrix(synthetic_records(10, seed=4, link=link))
        assert np.isnan(matrix.rho[:, 5]).all()
        assert np.isfinite(matrix.rho[:, 0]).all()

    def test_matches_brute_force(self):
        records = synthetic_records(15, seed=5)
        matrix = correlation_matrix(records)
        preds = predictor_matrix(records, list(ALL_PREDICTORS))
        for i in (0, 20, 50, 74):
            for j in (0, 13, 27):
                expected = brute_force_spearman(preds[:, i],
                                                target_vector(records, FEATURE_NAMES[j]))
                assert matrix.rho[i, j] == pytest.approx(expected, abs=1e-10)


class TestKfold:
    def test_camels_sizes(self):
        folds = kfold_split(511, 10, seed=1)
        sizes = sorted(f.size for f in folds)
        assert sizes == [51] * 9 + [52]

    def test_singletons(self):
        folds = kfold_split(10, 10, seed=2)
        assert all(f.size == 1 for f in folds)

    def test_partition_properties(self):
        folds = kfold_split(101, 7, seed=3)
        stacked = np.concatenate(folds)
        assert np.array_equal(np.sort(stacked), np.arange(101))

    def test_determinism(self):
        a = kfold_split(60, 10, seed=4)
        b = kfold_split(60, 10, seed=4)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))

    def test_bad_k(self):
        with pytest.raises(BadK):
            kfold_split(5, 6, seed=0)
        with pytest.raises(BadK):
            kfold_split(5, 0, seed=0)


class TestRmse:
    def test_perfect(self):
        assert rmse([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_direct_formula(self):
        assert rmse([0.0, 0.0], [3.0, 4.0]) == pytest.approx(np.sqrt(12.5))

    def test_symmetry(self, rng):
        a, b = rng.normal(size=9), rng.normal(size=9)
        assert rmse(a, b) == rmse(b, a)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            rmse([1.0], [1.0, 2.0])


FAST = ForestParams(n_trees=40)


class TestCrossValidate:
    def test_leakage_probe(self):
        def link(values, precipitation, rng):
            # streamflow target equals a precipitation predictor: group P
            # contains a perfect copy of the target
            values[0] = precipitation["x_acf1"]

        records = synthetic_records(60, seed=6, link=link)
        # mtry = group width so every node sees the leaked column
        params = ForestParams(n_trees=100, mtry=28)
        result = cross_validate(records, "x_acf1", "P", params=params, seed=1)
        target = target_vector(records, "x_acf1")
        assert result.rmse <= 0.3 * target.std(ddof=1)

    def test_pure_noise_target(self):
        records = synthetic_records(60, seed=7)
        result = cross_validate(records, "x_acf1", "S", params=FAST, seed=2)
        sd = target_vector(records, "x_acf1").std(ddof=1)
        assert 0.9 * sd <= result.rmse <= 1.3 * sd

    def test_every_record_predicted_once(self):
        records = synthetic_records(24, seed=8)
        folds = kfold_split(24, 4, seed=3)
        result = cross_validate(records, "entropy", "T", params=FAST, seed=3,
                                folds=folds)
        assert np.isfinite(result.predictions).all()

    def test_pooled_rmse_identity(self):
        records = synthetic_records(30, seed=9)
        folds = kfold_split(30, 4, seed=5)
        result = cross_validate(records, "spike", "SP", params=FAST, seed=5,
                                folds=folds)
        y = target_vector(records, "spike")
        pooled_sq = result.rmse**2
        weighted = sum(
            f.size * np.mean((result.predictions[f] - y[f]) ** 2) for f in folds
        ) / len(records)
        assert pooled_sq == pytest.approx(weighted, abs=1e-10)


@pytest.fixture(scope="module")
def full_report():
    records = synthetic_records(24, seed=10)
    return evaluate_all(records, ForestParams(n_trees=15), seed=11, k=3)


class TestEvaluateAll:
    @pytest.fixture
    def report(self, full_report):
        return full_report

    def test_matrix_shape_and_count(self, report):
        assert report.rmse.shape == (28, 7)
        assert report.rmse.size == 196

    def test_ranks_are_permutations(self, report):
        for row in report.ranks:
            assert sorted(row.tolist()) == list(range(1, 8))

    def test_static_relative_scores_zero(self, report):
        s = report.groups.index("S")
        np.testing.assert_allclose(report.relative_scores[:, s], 0.0, atol=1e-12)

    def test_rank_rmse_consistency(self, report):
        for ti in range(28):
            order = np.argsort(report.ranks[ti])
            sorted_rmse = report.rmse[ti][order]
            assert np.all(np.diff(sorted_rmse) >= -1e-15)

    def test_relative_score_arithmetic(self, report):
        s = report.groups.index("S")
        for gi in range(7):
            expected = 100.0 * (report.rmse[:, s] - report.rmse[:, gi]) / report.rmse[:, s]
            np.testing.assert_allclose(report.relative_scores[:, gi], expected,
                                       atol=1e-12)

    def test_predictions_from_full_group(self, report):
        assert report.prediction_group == "STP"
        assert set(report.predicted) == set(FEATURE_NAMES)
        assert all(v.size == 24 for v in report.predicted.values())

    def test_restricted_groups(self):
        records = synthetic_records(24, seed=12)
        restricted = evaluate_all(records, ForestParams(n_trees=10), seed=13,
                                  k=3, groups=("T", "P"))
        assert restricted.rmse.shape == (28, 2)
        assert restricted.relative_scores is None
        assert restricted.prediction_group is None

    def test_worker_determinism(self):
        records = synthetic_records(24, seed=14)
        a = evaluate_all(records, ForestParams(n_trees=10), seed=15, k=3,
                         groups=("S", "STP"), workers=1)
        b = evaluate_all(records, ForestParams(n_trees=10), seed=15, k=3,
                         groups=("S", "STP"), workers=2)
        np.testing.assert_array_equal(a.rmse, b.rmse)

    def test_fold_reuse_across_pairs(self, report):
        # the partition object recorded in the report is used for every pair;
        # rerunning one pair with those folds reproduces its RMSE exactly
        records = synthetic_records(24, seed=10)
        redo = cross_validate(records, "entropy", "TP",
                              params=ForestParams(n_trees=15), seed=11,
                              folds=report.folds)
        ti = report.targets.index("entropy")
        gi = report.groups.index("TP")
        assert redo.rmse == report.rmse[ti, gi]


class TestImportanceAll:
    def test_structure(self):
        records = synthetic_records(24, seed=16)
        reports = importance_all(records, ForestParams(n_trees=10), seed=17)
        assert set(reports) == set(FEATURE_NAMES)
        for report in reports.values():
            assert len(report.predictors) == 75
            assert sorted(report.ranks.tolist()) == list(range(1, 76))

    def test_injected_predictor_ranks_first(self):
        def link(values, precipitation, rng):
            values[FEATURE_NAMES.index("entropy")] = precipitation["entropy"]

        records = synthetic_records(40, seed=18, link=link)
        reports = importance_all(records, ForestParams(n_trees=60), seed=19)
        report = reports["entropy"]
        injected = report.predictors.index("precipitation_entropy")
        assert report.ranks[injected] == 1

    def test_determinism(self):
        records = synthetic_records(24, seed=20)
        a = importance_all(records, ForestParams(n_trees=10), seed=21)
        b = importance_all(records, ForestParams(n_trees=10), seed=21)
        for t in FEATURE_NAMES:
            np.testing.assert_array_equal(a[t].scores, b[t].scores)


class TestFeatureSummary:
    def test_constant_feature(self):
        def link(values, precipitation, rng):
            values[3] = 5.0

        rows = feature_summary(synthetic_records(10, seed=22, link=link))
        target_rows = [r for r in rows
                       if r.variable == "streamflow" and r.feature == FEATURE_NAMES[3]]
        assert target_rows[0].minimum == target_rows[0].maximum == 5.0

    def test_quartile_ordering(self):
        rows = feature_summary(synthetic_records(15, seed=23))
        assert len(rows) == 84
        for r in rows:
            assert r.minimum <= r.q1 <= r.median <= r.q3 <= r.maximum

    def test_matches_sort_oracle(self):
        records = synthetic_records(17, seed=24)
        rows = feature_summary(records)
        col = np.sort(target_vector(records, "x_acf1"))

        def interpolate(q):
            pos = q * (col.size - 1)
            lo = int(np.floor(pos))
            hi = min(lo + 1, col.size - 1)
            return col[lo] + (pos - lo) * (col[hi] - col[lo])

        row = next(r for r in rows
                   if r.variable == "streamflow" and r.feature == "x_acf1")
        assert row.q1 == pytest.approx(interpolate(0.25), abs=1e-12)
        assert row.median == pytest.approx(interpolate(0.5), abs=1e-12)
        assert row.q3 == pytest.approx(interpolate(0.75), abs=1e-12)
        assert row.minimum == col[0] and row.maximum == col[-1]


class TestWriters:
    def test_correlations_round_trip(self, tmp_path):
        matrix = correlation_matrix(synthetic_records(8, seed=25))
        path = tmp_path / "correlations.csv"
        write_correlations(path, matrix)
        lines = path.read_text().splitlines()
        assert len(lines) == 1 + 75 * 28
        # re-serializing the parsed file is the identity
        body = [line.split(",") for line in lines[1:]]
        rebuilt = ["predictor,target,rho"] + [
            f"{p},{t},{v if v == 'undefined' else repr(float(v))}"
            for p, t, v in body
        ]
        assert "\n".join(rebuilt) + "\n" == path.read_text()

    def test_evaluation_json_round_trip(self, tmp_path):
        records = synthetic_records(24, seed=26)
        report = evaluate_all(records, ForestParams(n_trees=8), seed=27, k=3,
                              groups=("S", "P", "STP"))
        path = tmp_path / "evaluation.json"
        write_evaluation(path, report)
        payload = read_evaluation(path)
        assert np.asarray(payload["rmse"]).shape == (28, 3)
        np.testing.assert_array_equal(np.asarray(payload["rmse"]), report.rmse)
        write_evaluation(tmp_path / "again.json", report)
        assert (tmp_path / "again.json").read_bytes() == path.read_bytes()

    def test_pred_vs_obs_rows(self, tmp_path):
        records = synthetic_records(24, seed=28)
        report = evaluate_all(records, ForestParams(n_trees=8), seed=29, k=3,
                              groups=("S", "STP"))
        path = tmp_path / "pred_vs_obs.csv"
        write_pred_vs_obs(path, report)
        lines = path.read_text().splitlines()
        assert len(lines) == 1 + 28 * 24

    def test_importance_and_summaries_files(self, tmp_path):
        records = synthetic_records(24, seed=30)
        reports = importance_all(records, ForestParams(n_trees=8), seed=31)
        write_importance(tmp_path / "importance.csv", reports)
        lines = (tmp_path / "importance.csv").read_text().splitlines()
        assert len(lines) == 1 + 28 * 75
        write_summaries(tmp_path / "summaries.csv", feature_summary(records))
        assert len((tmp_path / "summaries.csv").read_text().splitlines()) == 1 + 84
