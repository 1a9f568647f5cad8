import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdbench.alignment import (LadderEntry, alignment_report,
                               consistency_matrix, kendall_tau_b,
                               read_ladder_csv, significance_band,
                               tau_p_value, write_ladder_csv)
from fdbench.errors import (IncompleteLadderError, ParseError, ProtocolError,
                            UndefinedCorrelationError, ValidationError)

from oracles import brute_exact_two_sided_p, brute_tau_b

# reference ladder readings (fundus GAN block): strictly decreasing fid
# against each comparison column
SG_FID = [175.99, 121.59, 95.29, 69.70, 49.45, 39.17, 30.92, 24.83, 21.11,
          17.30]
SG_CMMD = [5.165, 2.980, 1.975, 1.563, 0.986, 0.736, 0.619, 0.489, 0.440,
           0.421]
MF_FID = [148.82, 105.81, 91.28, 80.00, 68.91, 67.76, 68.00]
MF_KID = [0.1632, 0.1109, 0.0940, 0.0823, 0.0740, 0.0741, 0.0749]


class TestKendallTau:
    def test_perfect_concordance(self):
        assert kendall_tau_b([1, 2, 3], [1, 2, 3]) == 1.0

    def test_perfect_discordance(self):
        assert kendall_tau_b([1, 2, 3], [3, 2, 1]) == -1.0

    def test_fundus_gan_fid_vs_cmmd(self):
        assert kendall_tau_b(SG_FID, SG_CMMD) == 1.0

    def test_fundus_diffusion_fid_vs_kid(self):
        # 2 of the 21 pairs are discordant: tau = 17/21
        assert kendall_tau_b(MF_FID, MF_KID) == pytest.approx(17 / 21,
                                                              abs=1e-12)

    def test_matches_brute_force_untied(self):
        rng = np.random.default_rng(0)
        for trial in range(200):
            n = int(rng.integers(2, 30))
            x = rng.standard_normal(n)
            y = rng.standard_normal(n)
            assert kendall_tau_b(x, y) == pytest.approx(brute_tau_b(x, y),
                                                        abs=1e-12)

    def test_matches_brute_force_tied(self):
        rng = np.random.default_rng(1)
        for trial in range(200):
            n = int(rng.integers(3, 20))
            x = rng.integers(0, 4, n).astype(float)
            y = rng.integers(0, 4, n).astype(float)
            if np.all(x == x[0]) or np.all(y == y[0]):
                continue
            assert kendall_tau_b(x, y) == pytest.approx(brute_tau_b(x, y),
                                                        abs=1e-12)

    def test_all_tied_rejected(self):
        with pytest.raises(UndefinedCorrelationError):
            kendall_tau_b([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            kendall_tau_b([1.0, 2.0], [1.0, 2.0, 3.0])

    def test_antisymmetry_in_second_argument(self):
        rng = np.random.default_rng(2)
        for trial in range(30):
            x = rng.integers(0, 5, 8).astype(float)
            y = rng.standard_normal(8)  # no ties
            if np.all(x == x[0]):
                continue
            assert kendall_tau_b(x, -y) == pytest.approx(
                -kendall_tau_b(x, y), abs=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.integers(-100, 100), min_size=3, max_size=12),
           st.sampled_from(["exp", "affine"]))
    def test_monotone_transform_invariance(self, y, transform):
        # integer inputs keep the tie pattern exact under the transforms
        x = list(range(len(y)))
        if len(set(y)) == 1:
            return
        ty = [math.exp(v / 100) for v in y] if transform == "exp" \
            else [3.0 * v + 7.0 for v in y]
        assert kendall_tau_b(x, ty) == pytest.approx(kendall_tau_b(x, y),
                                                     abs=1e-12)


class TestExactPValue:
    def test_n7_perfect_tau(self):
        x = list(range(7))
        p, band = tau_p_value(x, x, method="exact")
        assert p == pytest.approx(2 / 5040, abs=1e-10)
        assert band == "***"

    def test_n3_perfect_tau_not_significant(self):
        p, band = tau_p_value([1, 2, 3], [1, 2, 3], method="exact")
        assert p == pytest.approx(2 / 6, abs=1e-12)
        assert band == "n.s."

    def test_matches_enumeration_untied(self):
        rng = np.random.default_rng(3)
        for trial in range(20):
            n = int(rng.integers(3, 7))
            x = rng.standard_normal(n)
            y = rng.standard_normal(n)
            p, _ = tau_p_value(x, y, method="exact")
            assert p == pytest.approx(brute_exact_two_sided_p(x, y),
                                      abs=1e-12)

    def test_matches_enumeration_tied(self):
        rng = np.random.default_rng(4)
        for trial in range(20):
            n = int(rng.integers(3, 7))
            x = rng.integers(0, 3, n).astype(float)
            y = rng.integers(0, 3, n).astype(float)
            if np.all(x == x[0]) or np.all(y == y[0]):
                continue
            p, _ = tau_p_value(x, y, method="exact")
            assert p == pytest.approx(brute_exact_two_sided_p(x, y),
                                      abs=1e-12)

    def test_distribution_sums_to_one(self):
        # tail count at the loosest threshold covers every permutation
        for n in range(2, 8):
            x = list(range(n))
            y = list(range(n))
            from fdbench import backend
            count = backend.active().perm_tail_count(
                np.asarray(x, dtype=float), np.asarray(y, dtype=float), 0)
            assert count == math.factorial(n)

    def test_exact_capped_at_ten(self):
        x = list(range(11))
        with pytest.raises(ValidationError):
            tau_p_value(x, x, method="exact")

    def test_auto_switches_to_normal_for_large_n(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal(40)
        y = x + 0.5 * rng.standard_normal(40)
        p_auto, _ = tau_p_value(x, y, method="auto")
        p_norm, _ = tau_p_value(x, y, method="normal_approx")
        assert p_auto == p_norm

    def test_normal_approx_close_to_exact_at_n10(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal(10)
        y = x + 2.0 * rng.standard_normal(10)
        p_exact, _ = tau_p_value(x, y, method="exact")
        p_norm, _ = tau_p_value(x, y, method="normal_approx")
        assert p_norm == pytest.approx(p_exact, abs=0.05)


class TestBands:
    @pytest.mark.parametrize("p,band", [
        (0.5, "n.s."), (0.05, "n.s."), (0.049, "*"), (0.01, "*"),
        (0.0099, "**"), (0.005, "**"), (0.001, "**"), (0.0009, "***"),
        (1e-9, "***"), (1.0, "n.s."),
    ])
    def test_boundaries(self, p, band):
        assert significance_band(p) == band

    def test_invalid_p(self):
        with pytest.raises(ValidationError):
            significance_band(0.0)
        with pytest.raises(ValidationError):
            significance_band(1.5)


def entry(model, ladder, control, metrics, score=None):
    return LadderEntry(model_id=model, ladder_id=ladder,
                       control_value=control, metric_values=metrics,
                       downstream_score=score)


class TestConsistencyMatrix:
    def _toy_ladder(self):
        rows = []
        for i in range(6):
            rows.append(entry(f"m{i}", "toy", i,
                              {"a": 10.0 - i, "b": math.exp(-i),
                               "c": (i - 2.5) ** 2}))
        return rows

    def test_monotone_transform_gives_unit_tau(self):
        m = consistency_matrix(self._toy_ladder())
        assert m.tau("toy", "a", "b") == 1.0

    def test_symmetry_and_diagonal(self):
        m = consistency_matrix(self._toy_ladder())
        assert m.tau("toy", "a", "c") == m.tau("toy", "c", "a")
        assert m.tau("toy", "b", "b") == 1.0

    def test_pair_count(self):
        m = consistency_matrix(self._toy_ladder())
        assert m.pairs_total == 3

    def test_missing_metric_names_entry(self):
        rows = self._toy_ladder()
        broken = entry("m9", "toy", 9, {"a": 1.0, "b": 2.0})
        with pytest.raises(IncompleteLadderError, match="m9"):
            consistency_matrix(rows + [broken])

    def test_two_ladders_aggregate(self):
        rows = self._toy_ladder()
        for i in range(4):
            rows.append(entry(f"z{i}", "other", i,
                              {"a": float(i), "b": float(-i)}))
        m = consistency_matrix(rows)
        assert m.pairs_total == 4
        assert m.tau("other", "a", "b") == -1.0


class TestAlignmentReport:
    def _ideal_ladder(self, n=7):
        # downstream rises exactly as the metric falls: tau = -1
        return [entry(f"m{i}", "lad", i, {"fid": 100.0 - 3 * i},
                      score=0.5 + 0.05 * i) for i in range(n)]

    def test_ideal_metric(self):
        result, rows = alignment_report(self._ideal_ladder())
        m = result.per_metric["fid"]
        assert m.tau == -1.0
        assert m.p_value == pytest.approx(2 / 5040, abs=1e-10)
        assert m.band == "***"

    def test_plot_table_reciprocals(self):
        result, rows = alignment_report(self._ideal_ladder(3))
        assert rows[0]["inv_fid"] == pytest.approx(1 / 100.0)
        assert rows[0]["downstream_score"] == 0.5

    def test_zero_metric_value_inf_sentinel(self):
        ladder = self._ideal_ladder(3)
        ladder[1] = entry("m1", "lad", 1, {"fid": 0.0}, score=0.55)
        _, rows = alignment_report(ladder)
        assert rows[1]["inv_fid"] == "inf"

    def test_missing_score_names_model(self):
        ladder = self._ideal_ladder()
        ladder[2] = entry("m2", "lad", 2, {"fid": 94.0})
        with pytest.raises(ProtocolError, match="m2"):
            alignment_report(ladder)

    def test_null_scores_rarely_significant(self):
        rng = np.random.default_rng(7)
        metric = np.linspace(10, 4, 7)
        hits = 0
        trials = 1000
        for _ in range(trials):
            scores = rng.permutation(7).astype(float)
            ladder = [entry(f"m{i}", "lad", i, {"x": metric[i]},
                            score=scores[i]) for i in range(7)]
            result, _ = alignment_report(ladder)
            if result.per_metric["x"].band == "n.s.":
                hits += 1
        assert hits >= 0.9 * trials

    def test_too_few_entries(self):
        with pytest.raises(ValidationError):
            alignment_report(self._ideal_ladder(2))


class TestLadderCsv:
    def test_round_trip(self, tmp_path):
        rows = [entry(f"m{i}", "lad", i, {"fid": 10.0 - i, "kid": i * 0.1},
                      score=0.6 + 0.01 * i) for i in range(5)]
        path = tmp_path / "ladder.csv"
        write_ladder_csv(rows, path)
        back = read_ladder_csv(path)
        assert [e.model_id for e in back] == [e.model_id for e in rows]
        assert back[2].metric_values == rows[2].metric_values
        assert back[3].downstream_score == rows[3].downstream_score

    def test_missing_score_cells_become_none(self, tmp_path):
        path = tmp_path / "ladder.csv"
        path.write_text("model_id,ladder_id,control_value,fid,downstream_score\n"
                        "m0,lad,0,10.0,\n" "m1,lad,1,9.0,0.5\n")
        back = read_ladder_csv(path)
        assert back[0].downstream_score is None
        assert back[1].downstream_score == 0.5

    def test_missing_required_column(self, tmp_path):
        path = tmp_path / "ladder.csv"
        path.write_text("model_id,control_value,fid\nm0,0,1.0\n")
        with pytest.raises(ParseError):
            read_ladder_csv(path)

    def test_bad_numeric(self, tmp_path):
        path = tmp_path / "ladder.csv"
        path.write_text("model_id,ladder_id,control_value,fid,downstream_score\n"
                        "m0,lad,zero,10.0,\n")
        with pytest.raises(ParseError):
            read_ladder_csv(path)
