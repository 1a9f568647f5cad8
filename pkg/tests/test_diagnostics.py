import json
import math

import numpy as np
import pytest

from fdbench.diagnostics import (diagnostics_report, entropy_nats,
                                 sparsity_l0)
from fdbench.errors import ValidationError
from fdbench.store import FeatureSet


def fs_of(rows):
    return FeatureSet(data=np.atleast_2d(np.asarray(rows, dtype=np.float32)),
                      extractor_id="t", role="generated")


class TestSparsity:
    def test_zero_vector(self):
        assert sparsity_l0(fs_of(np.zeros((1, 100))))[0] == 0.0

    def test_full_support(self):
        assert sparsity_l0(fs_of(np.full((1, 100), 0.5)))[0] == 1.0

    def test_hand_count(self):
        vals = sparsity_l0(fs_of([[0.005, -0.02, 0.3, 0.0]]))
        assert vals[0] == pytest.approx(0.5)

    def test_sign_flip_invariance(self):
        rng = np.random.default_rng(0)
        v = rng.standard_normal((5, 20))
        assert np.array_equal(sparsity_l0(fs_of(v)), sparsity_l0(fs_of(-v)))

    def test_permutation_invariance(self):
        rng = np.random.default_rng(1)
        v = rng.standard_normal(30)
        p = rng.permutation(30)
        assert sparsity_l0(fs_of([v]))[0] == sparsity_l0(fs_of([v[p]]))[0]

    def test_threshold_is_strict(self):
        # entries exactly at the threshold do not count
        assert sparsity_l0(fs_of([[0.01, 0.011]]), threshold=0.01)[0] == 0.5

    def test_bad_threshold(self):
        with pytest.raises(ValidationError):
            sparsity_l0(fs_of([[1.0]]), threshold=0.0)

    def test_range(self):
        rng = np.random.default_rng(2)
        vals = sparsity_l0(fs_of(rng.standard_normal((50, 13))))
        assert np.all((vals >= 0) & (vals <= 1))


class TestEntropy:
    def test_constant_vector_is_uniform(self):
        for c in (0.0, 1.0, -7.3):
            v = entropy_nats(fs_of(np.full((1, 100), c)))[0]
            assert v == pytest.approx(math.log(100), abs=1e-9)

    def test_hand_example(self):
        v = entropy_nats(fs_of([[0.0, math.log(3.0)]]))[0]
        expected = -(0.4 * math.log(0.4) + 0.6 * math.log(0.6))
        assert v == pytest.approx(expected, rel=1e-6)
        assert v == pytest.approx(0.67301, abs=1e-5)

    def test_concentrated_vector_near_zero(self):
        assert entropy_nats(fs_of([[50.0, -50.0]]))[0] <= 1e-10

    def test_extreme_values_stay_finite(self):
        v = entropy_nats(fs_of([[1000.0, -1000.0, 0.0]]))[0]
        assert math.isfinite(v)
        assert v >= 0.0

    def test_upper_bound(self):
        rng = np.random.default_rng(3)
        vals = entropy_nats(fs_of(rng.standard_normal((40, 17))))
        assert np.all(vals <= math.log(17) + 1e-12)
        assert np.all(vals >= 0)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(4)
        v = rng.standard_normal(25)
        p = rng.permutation(25)
        a = entropy_nats(fs_of([v]))[0]
        b = entropy_nats(fs_of([v[p]]))[0]
        assert a == pytest.approx(b, rel=1e-12)


class TestReport:
    def test_json_round_trip(self):
        rng = np.random.default_rng(5)
        rep = diagnostics_report(fs_of(rng.standard_normal((10, 8))))
        blob = json.dumps(rep.to_json_dict())
        back = json.loads(blob)
        assert back["n_vectors"] == 10
        assert back["threshold"] == 0.01
        assert len(back["l0"]["values"]) == 10

    def test_csv_output(self, tmp_path):
        rep = diagnostics_report(fs_of([[0.5, 0.0], [1.0, 1.0]]))
        path = tmp_path / "diag.csv"
        rep.write_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "row,relative_l0,entropy_nats"
        assert len(lines) == 3
