"""Compiled core vs pure-NumPy fallback: both must implement the same
contract; the compiled path is an optimization only."""

import math

import numpy as np
import pytest

from fdbench import backend
from fdbench.backend import pure

HAVE_COMPILED = backend._load("auto")[1] == "compiled"

needs_compiled = pytest.mark.skipif(not HAVE_COMPILED,
                                    reason="compiled core not built")


def test_default_selection_resolves():
    assert backend.active_name() in ("compiled", "pure")


def test_use_context_manager_forces_pure():
    with backend.use("pure") as mod:
        assert mod is pure
        assert backend.active_name() == "pure"


@needs_compiled
class TestBackendEquivalence:
    def setup_method(self):
        self.core = backend._load("compiled")[0]
        rng = np.random.default_rng(77)
        self.cases = [
            (rng.standard_normal((n, d)), rng.standard_normal((m, d)))
            for n, m, d in [(1, 1, 1), (5, 9, 3), (64, 33, 8), (300, 300, 2)]
        ]

    @pytest.mark.parametrize("kind,params", [
        (pure.KIND_RBF, (1.3, 0.0, 0.0)),
        (pure.KIND_POLY, (3.0, 0.2, 1.0)),
        (pure.KIND_RQ, (0.8, 1.1, 0.0)),
    ])
    def test_pair_sum_agreement(self, kind, params):
        for x, y in self.cases:
            a = self.core.pair_sum(x, y, kind, *params)
            b = pure.pair_sum(x, y, kind, *params)
            assert a == pytest.approx(b, rel=1e-12)

    @pytest.mark.parametrize("kind,params", [
        (pure.KIND_RBF, (0.9, 0.0, 0.0)),
        (pure.KIND_POLY, (2.0, 0.5, 0.5)),
        (pure.KIND_RQ, (1.5, 0.7, 0.0)),
    ])
    def test_gram_agreement(self, kind, params):
        for x, y in self.cases:
            a = self.core.gram(x, y, kind, *params)
            b = pure.gram(x, y, kind, *params)
            assert np.allclose(a, b, rtol=1e-12, atol=1e-14)

    def test_kendall_agreement(self):
        rng = np.random.default_rng(5)
        for trial in range(50):
            n = int(rng.integers(2, 40))
            x = rng.integers(0, 6, n).astype(float)
            y = rng.integers(0, 6, n).astype(float)
            assert self.core.kendall_s(x, y) == pure.kendall_s(x, y)

    def test_perm_tail_agreement(self):
        rng = np.random.default_rng(6)
        for trial in range(15):
            n = int(rng.integers(2, 7))
            x = rng.integers(0, 4, n).astype(float)
            y = rng.integers(0, 4, n).astype(float)
            for s_abs in range(0, n * (n - 1) // 2 + 1, 3):
                assert self.core.perm_tail_count(x, y, s_abs) == \
                    pure.perm_tail_count(x, y, s_abs)

    def test_perm_total_is_factorial(self):
        x = np.arange(8.0)
        assert self.core.perm_tail_count(x, x, 0) == math.factorial(8)
