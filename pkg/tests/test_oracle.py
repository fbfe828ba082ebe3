import numpy as np
import pytest

from specres.disentangle import enumerate_a1_candidates, sort_magnitudes
from specres.errors import ConsistencyError
from specres.model import SparseSignal, generate_signal, measure_intensities, reference_instance
from specres.oracle import (
    autocorrelation_intensity,
    brute_force_moduli,
    independent_residual,
    pairwise_products,
)
from specres.pipeline import validate_candidate


def random_moduli(rng, r):
    """Strictly decreasing moduli whose pairwise products are pairwise distinct."""
    while True:
        mod = np.sort(rng.uniform(0.05, 3.0, r))[::-1]
        prods = np.sort(pairwise_products(mod))
        if np.all(np.diff(mod) < -1e-3 * mod[1:]) and (prods.size < 2 or np.all(np.diff(prods) > 1e-6 * prods[1:])):
            return mod


def random_signal(rng, r):
    return generate_signal(r, int(rng.integers(2**32)), 0.0, complex_amplitudes=bool(rng.integers(2)))


def random_pair(rng):
    """A random signal scored against the samples of an unrelated random signal."""
    r = int(rng.integers(1, 7))
    return random_signal(rng, r), measure_intensities(random_signal(rng, r), int(rng.integers(1, 25)))


class TestBruteForce:
    def test_three(self):
        res = brute_force_moduli(pairwise_products((3, 2, 1)), 3)
        assert res.count == 1
        np.testing.assert_allclose(res.consistent_assignments[0], (3, 2, 1))

    def test_colliding_products(self):
        res = brute_force_moduli(pairwise_products((6, 3, 2, 1)), 4)
        assert res.count >= 1
        assert any(np.allclose(v, (6, 3, 2, 1)) for v in res.consistent_assignments)

    def test_r2_parametric(self):
        res = brute_force_moduli([20], 2)
        assert res.parametric and res.count == 0

    def test_genuine_ambiguity(self):
        res = brute_force_moduli(pairwise_products((4, 3, 2, 1)), 4)
        assert res.count == 2
        np.testing.assert_allclose(res.consistent_assignments[1], (4, 3, 2, 1))
        np.testing.assert_allclose(res.consistent_assignments[0], np.sqrt(24) / np.arange(1, 5))

    def test_size_limit(self):
        with pytest.raises(ValueError):
            brute_force_moduli(pairwise_products(range(7, 0, -1)), 7)

    def test_wrong_count(self):
        with pytest.raises(ValueError):
            brute_force_moduli([1.0, 2.0], 3)

    def test_matches_sort_magnitudes(self):
        rng = np.random.default_rng(20)
        for n in range(500):
            r = 3 + n % 4
            mod = random_moduli(rng, r)
            prods = rng.permutation(pairwise_products(mod))
            res = brute_force_moduli(prods, r)
            greedy = sort_magnitudes(prods, mod[0])
            np.testing.assert_allclose(greedy, mod, rtol=1e-9)
            assert any(np.allclose(greedy, v, rtol=1e-9) for v in res.consistent_assignments)
            # r = 4 always admits a second vector with p14 and p23 exchanged
            assert res.count == (2 if r == 4 else 1), mod
            # the greedy sort run over every |a_1| candidate reaches exactly the oracle's set
            reached = []
            for a1 in enumerate_a1_candidates(prods, r):
                try:
                    reached.append(sort_magnitudes(prods, a1))
                except ConsistencyError:
                    pass
            assert len(reached) == res.count
            for v in res.consistent_assignments:
                assert any(np.allclose(v, w, rtol=1e-9) for w in reached)


class TestIndependentResidual:
    def test_own_samples(self):
        s = generate_signal(5, 8, complex_amplitudes=True)
        assert independent_residual(s, measure_intensities(s, 21)) <= 1e-12

    def test_closed_form(self):
        s = SparseSignal([1.0, 1.0], [0.0, 0.25])
        for k in range(-4, 4):
            assert autocorrelation_intensity(s, k) == pytest.approx(2 + 2 * np.cos(np.pi * k / 2), abs=1e-14)

    def test_reference(self):
        s = reference_instance()
        assert independent_residual(s, measure_intensities(s, 21)) <= 1e-12

    def test_agrees_with_pipeline(self):
        rng = np.random.default_rng(21)
        for _ in range(1000):
            cand, samples = random_pair(rng)
            a, b = validate_candidate(cand, samples), independent_residual(cand, samples)
            assert abs(a - b) <= 1e-10 * max(a, b)

    def test_agrees_near_truth(self):
        # residuals near zero are compared in absolute terms: both are at the rounding floor
        rng = np.random.default_rng(22)
        for _ in range(200):
            r = int(rng.integers(1, 7))
            truth = random_signal(rng, r)
            samples = measure_intensities(truth, int(rng.integers(1, 25)))
            cand = SparseSignal(truth.amplitudes * (1 + 1e-9 * rng.standard_normal(r)), truth.locations)
            assert abs(validate_candidate(cand, samples) - independent_residual(cand, samples)) <= 1e-14
