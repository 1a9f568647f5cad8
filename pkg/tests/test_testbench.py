import numpy as np
import pytest

from fdbench.errors import ValidationError
from fdbench.moments import fit_gaussian_summary, frechet_distance
from fdbench.store import FeatureSet
from fdbench.testbench import (EllipticalSpec, LadderSpec, discrete_w2_exact,
                               make_quality_ladder, sample_elliptical)

from oracles import w2_by_matching_enumeration


def fs_of(rows):
    return FeatureSet(data=np.atleast_2d(np.asarray(rows, dtype=np.float32)),
                      extractor_id="t", role="generated")


class TestEllipticalSpec:
    def test_non_pd_scale_rejected(self):
        with pytest.raises(ValidationError):
            EllipticalSpec(mu=[0.0, 0.0], scale=[[1.0, 2.0], [2.0, 1.0]])

    def test_student_t_needs_dof(self):
        with pytest.raises(ValidationError):
            EllipticalSpec(mu=[0.0], scale=[[1.0]], generator="student_t")
        with pytest.raises(ValidationError):
            EllipticalSpec(mu=[0.0], scale=[[1.0]], generator="student_t",
                           dof=2.0)

    def test_student_t_covariance_inflation(self):
        spec = EllipticalSpec(mu=[0.0], scale=[[2.0]],
                              generator="student_t", dof=6.0)
        assert spec.covariance()[0, 0] == pytest.approx(3.0)


class TestSampler:
    def test_gaussian_moments(self):
        spec = EllipticalSpec(mu=[0.0, 0.0], scale=np.eye(2))
        fs = sample_elliptical(spec, 50000, seed=0)
        data = np.asarray(fs.data, dtype=np.float64)
        assert np.all(np.abs(data.mean(axis=0)) < 0.02)
        cov = np.cov(data, rowvar=False)
        assert np.all(np.abs(cov - np.eye(2)) < 0.03)

    def test_translation_equivariance(self):
        for gen, dof in (("gaussian", None), ("student_t", 5.0)):
            spec = EllipticalSpec(mu=[7.0, 7.0], scale=np.eye(2),
                                  generator=gen, dof=dof)
            fs = sample_elliptical(spec, 30000, seed=1)
            mean = np.asarray(fs.data, dtype=np.float64).mean(axis=0)
            assert np.all(np.abs(mean - 7.0) < 0.1)

    def test_student_t_has_heavy_tails(self):
        scale = np.eye(1)
        t_spec = EllipticalSpec(mu=[0.0], scale=scale,
                                generator="student_t", dof=5.0)
        g_spec = EllipticalSpec(mu=[0.0], scale=scale)
        t = np.asarray(sample_elliptical(t_spec, 100000, seed=2).data,
                       dtype=np.float64)[:, 0]
        g = np.asarray(sample_elliptical(g_spec, 100000, seed=3).data,
                       dtype=np.float64)[:, 0]

        def excess_kurtosis(v):
            c = v - v.mean()
            return float((c ** 4).mean() / (c ** 2).mean() ** 2 - 3.0)

        assert excess_kurtosis(t) > 0.5
        assert abs(excess_kurtosis(g)) < 0.1

    def test_deterministic(self):
        spec = EllipticalSpec(mu=[0.0], scale=[[1.0]])
        a = sample_elliptical(spec, 100, seed=9)
        b = sample_elliptical(spec, 100, seed=9)
        assert np.array_equal(a.data, b.data)


class TestDiscreteW2:
    def test_single_pair(self):
        assert discrete_w2_exact(fs_of([[0.0, 0.0]]),
                                 fs_of([[3.0, 4.0]])) == pytest.approx(5.0)

    def test_identical_sets(self):
        rng = np.random.default_rng(0)
        x = fs_of(rng.standard_normal((20, 3)))
        assert discrete_w2_exact(x, x) == pytest.approx(0.0, abs=1e-12)

    def test_1d_two_point_matching(self):
        # 0->1, 2->3 beats 0->3, 2->1: W2 = 1
        w = discrete_w2_exact(fs_of([[0.0], [2.0]]), fs_of([[1.0], [3.0]]))
        assert w == pytest.approx(1.0)

    def test_matches_matching_enumeration(self):
        rng = np.random.default_rng(1)
        for trial in range(15):
            n = int(rng.integers(2, 7))
            x = rng.standard_normal((n, 2))
            y = rng.standard_normal((n, 2))
            got = discrete_w2_exact(fs_of(x), fs_of(y))
            want = w2_by_matching_enumeration(
                np.asarray(fs_of(x).data, dtype=np.float64),
                np.asarray(fs_of(y).data, dtype=np.float64))
            assert got == pytest.approx(want, rel=1e-9)

    def test_symmetry(self):
        rng = np.random.default_rng(2)
        x = fs_of(rng.standard_normal((15, 2)))
        y = fs_of(rng.standard_normal((15, 2)))
        assert discrete_w2_exact(x, y) == pytest.approx(
            discrete_w2_exact(y, x), rel=1e-12)

    def test_triangle_inequality(self):
        rng = np.random.default_rng(3)
        for trial in range(10):
            x = fs_of(rng.standard_normal((12, 2)))
            y = fs_of(rng.standard_normal((12, 2)))
            z = fs_of(rng.standard_normal((12, 2)))
            assert discrete_w2_exact(x, z) <= discrete_w2_exact(x, y) \
                + discrete_w2_exact(y, z) + 1e-9

    def test_unequal_sizes_rejected(self):
        with pytest.raises(ValidationError):
            discrete_w2_exact(fs_of([[0.0], [1.0]]), fs_of([[0.0]]))


class TestFdAgainstOracles:
    def test_fitted_fd_matches_analytic_and_w2(self):
        mu_a = np.zeros(4)
        mu_b = np.array([2.0, -1.0, 0.5, 0.0])
        a_spec = EllipticalSpec(mu=mu_a, scale=np.eye(4))
        b_scale = np.diag([1.0, 2.0, 0.5, 1.5])
        b_spec = EllipticalSpec(mu=mu_b, scale=b_scale)
        analytic = frechet_distance(a_spec.summary(), b_spec.summary())
        xs = sample_elliptical(a_spec, 2000, seed=10)
        ys = sample_elliptical(b_spec, 2000, seed=11)
        fitted = frechet_distance(fit_gaussian_summary(xs),
                                  fit_gaussian_summary(ys))
        w2 = discrete_w2_exact(xs, ys)
        assert fitted == pytest.approx(analytic, rel=0.05)
        assert analytic == pytest.approx(w2, rel=0.05)

    def test_student_t_elliptical_family_closed_form(self):
        # same dof on both sides: the closed form on true covariances
        # matches the empirical W2
        dof = 8.0
        a = EllipticalSpec(mu=[0.0, 0.0], scale=np.eye(2),
                           generator="student_t", dof=dof)
        b = EllipticalSpec(mu=[3.0, 0.0], scale=np.diag([2.0, 0.5]),
                           generator="student_t", dof=dof)
        analytic = frechet_distance(a.summary(), b.summary())
        xs = sample_elliptical(a, 4000, seed=20)
        ys = sample_elliptical(b, 4000, seed=21)
        w2 = discrete_w2_exact(xs, ys)
        assert analytic == pytest.approx(w2, rel=0.05)


class TestQualityLadder:
    def _spec(self, **kw):
        base = dict(
            reference=EllipticalSpec(mu=[0.0, 0.0], scale=np.eye(2)),
            steps=4, mean_drifts=(0.0, 1.0, 2.0, 3.0),
            cov_factors=(1.0, 1.5, 2.0, 2.5), n_per_step=50, seed=5)
        base.update(kw)
        return LadderSpec(**base)

    def test_step_zero_truth_is_zero(self):
        entries, _ = make_quality_ladder(self._spec())
        assert entries[0].metric_values["ground_truth_fd"] == pytest.approx(
            0.0, abs=1e-9)

    def test_monotone_drift_means_monotone_truth(self):
        entries, _ = make_quality_ladder(self._spec())
        truths = [e.metric_values["ground_truth_fd"] for e in entries]
        assert all(b > a for a, b in zip(truths, truths[1:]))

    def test_deterministic(self):
        e1, f1 = make_quality_ladder(self._spec())
        e2, f2 = make_quality_ladder(self._spec())
        for key in f1:
            assert np.array_equal(f1[key].data, f2[key].data)
        assert [e.metric_values for e in e1] == [e.metric_values for e in e2]

    def test_non_monotone_factors_rejected(self):
        with pytest.raises(ValidationError):
            self._spec(cov_factors=(1.0, 2.0, 1.5, 2.5))

    def test_emits_reference_and_steps(self):
        entries, features = make_quality_ladder(self._spec())
        assert "reference" in features
        assert features["reference"].role == "real_test"
        assert len(entries) == 4
        assert features["sim-1"].role == "generated"
