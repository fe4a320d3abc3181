"""Statistics and aggregation: error metric, Welch test, CSV, renders."""

import math

import numpy as np
import pytest
import scipy.special
import scipy.stats

from rescuesim.metrics import (
    REFERENCE_TABLE1,
    aggregate_report,
    localization_error,
    parse_csv_column,
    regularized_incomplete_beta,
    render_map_pgm,
    student_t_cdf,
    welch_t_test,
)
from rescuesim.grid import FREE, OCCUPIED, OccupancyGrid
from rescuesim.mission import MissionReport


class TestLocalizationError:
    def test_zero_for_identical(self):
        assert localization_error([1, 2, 3], [1, 2, 3]) == 0.0

    def test_unit_offset(self):
        assert localization_error([1, 0, 0], [0, 0, 0]) == pytest.approx(1.0)

    def test_3_4_5_triangle(self):
        assert localization_error([0.3, 0.4, 0.0], [0, 0, 0]) == pytest.approx(0.5)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            localization_error([math.nan, 0, 0], [0, 0, 0])


class TestIncompleteBeta:
    def test_against_scipy(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            a = float(rng.uniform(0.2, 30))
            b = float(rng.uniform(0.2, 30))
            x = float(rng.uniform(0, 1))
            assert regularized_incomplete_beta(x, a, b) == pytest.approx(
                scipy.special.betainc(a, b, x), abs=1e-12
            )

    def test_edges(self):
        assert regularized_incomplete_beta(0.0, 2.0, 3.0) == 0.0
        assert regularized_incomplete_beta(1.0, 2.0, 3.0) == 1.0


class TestStudentTCdf:
    def test_published_checkpoint(self):
        # One-sided upper tail at t=2.0, df=18 is 0.0305 in standard
        # t-tables.
        p = 1.0 - student_t_cdf(2.0, 18)
        assert p == pytest.approx(0.0304, abs=6e-4)
        assert p == pytest.approx(scipy.stats.t.sf(2.0, 18), abs=1e-6)

    def test_symmetry_and_median(self):
        assert student_t_cdf(0.0, 7) == 0.5
        for t in (0.3, 1.7, 4.2):
            assert student_t_cdf(-t, 9) == pytest.approx(1 - student_t_cdf(t, 9), abs=1e-12)

    def test_against_scipy_grid(self):
        for df in (1, 2, 5, 10.5, 30, 200):
            for t in np.linspace(-6, 6, 25):
                assert student_t_cdf(float(t), df) == pytest.approx(
                    scipy.stats.t.cdf(t, df), abs=1e-9
                )


class TestWelch:
    def test_identical_samples(self):
        a = [0.2, 0.3, 0.25, 0.4]
        res = welch_t_test(a, list(a))
        assert res.t_statistic == 0.0
        assert res.p_value == 0.5

    def test_reference_world_columns(self):
        t = REFERENCE_TABLE1["world"]
        res = welch_t_test(t["ckf"], t["last"])
        assert res.mean_a == pytest.approx(0.15, abs=0.005)
        assert res.mean_b == pytest.approx(0.27, abs=0.005)
        assert res.p_value == pytest.approx(0.02, abs=0.005)

    def test_reference_house_columns(self):
        t = REFERENCE_TABLE1["house"]
        res = welch_t_test(t["ckf"], t["last"])
        assert res.mean_a == pytest.approx(0.30, abs=0.01)
        assert res.mean_b == pytest.approx(0.36, abs=0.01)
        assert res.p_value == pytest.approx(0.22, abs=0.02)

    def test_antisymmetry_and_p_sum(self):
        rng = np.random.default_rng(4)
        for _ in range(25):
            a = rng.normal(0, 1, rng.integers(3, 20))
            b = rng.normal(0.3, 2, rng.integers(3, 20))
            ab = welch_t_test(a, b)
            ba = welch_t_test(b, a)
            assert ab.t_statistic == pytest.approx(-ba.t_statistic)
            assert ab.p_value + ba.p_value == pytest.approx(1.0, abs=1e-9)
            assert ab.degrees_of_freedom == pytest.approx(ba.degrees_of_freedom)
            assert 0.0 <= ab.p_value <= 1.0 and ab.degrees_of_freedom > 0

    def test_shift_invariance(self):
        rng = np.random.default_rng(5)
        a = rng.normal(0, 1, 12)
        b = rng.normal(0.4, 1.5, 9)
        base = welch_t_test(a, b)
        shifted = welch_t_test(a + 13.7, b + 13.7)
        assert shifted.t_statistic == pytest.approx(base.t_statistic)
        assert shifted.p_value == pytest.approx(base.p_value)
        assert shifted.degrees_of_freedom == pytest.approx(base.degrees_of_freedom)

    def test_matches_scipy_welch(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            a = rng.normal(0, 1, rng.integers(4, 30))
            b = rng.normal(0.2, 1.7, rng.integers(4, 30))
            mine = welch_t_test(a, b)
            ref = scipy.stats.ttest_ind(a, b, equal_var=False, alternative="less")
            assert mine.p_value == pytest.approx(float(ref.pvalue), abs=1e-10)

    def test_degenerate_variance_rejected(self):
        with pytest.raises(ValueError):
            welch_t_test([1.0, 1.0, 1.0], [2.0, 2.0])
        with pytest.raises(ValueError):
            welch_t_test([1.0], [2.0, 3.0])


def fake_report(seed, explorer, errors):
    tag_results = {
        tid: {"truth": [0, 0, 0], "detected": True,
              "ckf_error": ckf, "last_error": last}
        for tid, (ckf, last) in enumerate(errors)
    }
    return MissionReport(
        status="DONE", seed=seed, explorer=explorer, world_name="test",
        exploration_time=100.0 + seed, total_time=200.0 + seed,
        detected_tags=list(range(len(errors))),
        expected_tags=list(range(len(errors))),
        tag_results=tag_results, events=[], counters={},
        config_echo={},
    )


class TestAggregateReport:
    def test_singleton_mean_equals_row(self):
        report = fake_report(0, "nbv", [(0.1, 0.2)])
        csv_text = aggregate_report([report])
        lines = csv_text.strip().splitlines()
        assert len(lines) == 3  # header + row + mean
        explore = parse_csv_column(csv_text, "exploration_time")
        assert explore == [100.0]
        mean_row = lines[-1].split(",")
        header = lines[0].split(",")
        assert mean_row[header.index("exploration_time")] == repr(100.0)

    def test_reference_column_means(self):
        t = REFERENCE_TABLE1["world"]
        assert np.mean(t["ckf"]) == pytest.approx(0.15, abs=0.005)
        assert np.mean(t["last"]) == pytest.approx(0.27, abs=0.005)

    def test_round_trip_bit_exact(self):
        reports = [fake_report(s, e, [(0.1 * s + 0.05, 0.2 * s + 0.07)])
                   for s in range(3) for e in ("nbv", "greedy")]
        csv_text = aggregate_report(reports)
        times = parse_csv_column(csv_text, "total_time")
        assert times == [r.total_time for r in reports]
        ckf_col = parse_csv_column(csv_text, "mean_ckf_error")
        expect = [0.1 * s + 0.05 for s in range(3) for _ in range(2)]
        assert ckf_col == expect  # repr round-trip is exact

    def test_mean_rows_per_explorer(self):
        reports = [fake_report(s, e, [(0.1, 0.2)]) for s in range(4)
                   for e in ("nbv", "greedy")]
        csv_text = aggregate_report(reports)
        lines = csv_text.strip().splitlines()
        mean_lines = [ln for ln in lines if ",mean," in ln]
        assert len(mean_lines) == 2
        header = lines[0].split(",")
        for ln in mean_lines:
            parts = ln.split(",")
            assert float(parts[header.index("exploration_time")]) == pytest.approx(101.5)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate_report([])

    def test_parse_missing_column(self):
        with pytest.raises(ValueError):
            parse_csv_column("a,b\n1,2\n", "c")

    def test_parse_malformed_row(self):
        with pytest.raises(ValueError):
            parse_csv_column("a,b\n1\n", "a")


class TestRenderMap:
    def test_overlay_levels(self):
        g = OccupancyGrid(width=8, height=8, resolution=0.5)
        g.cells[:] = FREE
        g.cells[0, :] = OCCUPIED
        data = render_map_pgm(g, tags_xy=[(1.25, 1.25)], goals_xy=[(2.75, 2.75)],
                              robot_xy=(3.75, 3.75))
        header_end = data.index(b"255\n") + 4
        img = np.frombuffer(data[header_end:], dtype=np.uint8).reshape(8, 8)[::-1]
        assert img[2, 2] == 64    # tag
        assert img[5, 5] == 128   # goal
        assert img[7, 7] == 32    # robot
        assert img[0, 0] == 0     # wall row
