import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specres.disentangle import (
    LabeledPairs,
    enumerate_a1_candidates,
    label_products,
    moduli_from_two,
    solve_locations,
    solve_phases,
    sort_magnitudes,
    sparsity_from_pair_count,
)
from specres.errors import (
    BoxError,
    CollisionError,
    ConsistencyError,
    LabelingError,
    LeftoverError,
    PhaseInconsistencyError,
    RankError,
)
from specres.model import SparseSignal, generate_signal, measure_intensities, model_order, reference_instance
from specres.oracle import pairwise_products
from specres.pencil import CorrelationSet
from specres.pipeline import RecoveryConfig, compare_solutions, solve_from_correlations

REF_MODULI = (2.2056, 0.9052, 0.5160, 0.4296, 0.0785)


def exact_correlations(signal: SparseSignal) -> CorrelationSet:
    a, t = signal.amplitudes, signal.locations
    pairs = [(i, l) for i in range(signal.r) for l in range(signal.r) if i != l]
    return CorrelationSet(
        taus=np.array([t[i] - t[l] for i, l in pairs]),
        coeffs=np.array([a[i] * np.conj(a[l]) for i, l in pairs]),
        dc_power=float(np.sum(np.abs(a) ** 2)),
    )


def _pairs(moduli, taus, coeffs=None):
    moduli = np.asarray(moduli, dtype=float)
    idx = np.array(list(itertools.combinations(range(moduli.size), 2)))
    taus = np.asarray(taus, dtype=float)
    coeffs = moduli[idx[:, 0]] * moduli[idx[:, 1]] if coeffs is None else np.asarray(coeffs)
    return LabeledPairs(moduli, idx[:, 0], idx[:, 1], moduli[idx[:, 0]] * moduli[idx[:, 1]], taus, coeffs)


class TestSortMagnitudes:
    def test_three(self):
        np.testing.assert_allclose(sort_magnitudes([6, 3, 2], 3), [3, 2, 1])

    def test_two(self):
        np.testing.assert_allclose(sort_magnitudes([20], 5), [5, 4])

    def test_reference(self):
        prods = pairwise_products(REF_MODULI)
        np.testing.assert_allclose(sort_magnitudes(prods[::-1], 2.2056), REF_MODULI, rtol=1e-12)

    def test_wrong_a1(self):
        with pytest.raises(ConsistencyError):
            sort_magnitudes([6, 3, 2], 2.5)

    def test_second_candidate_is_a_genuine_alternative(self):
        # (4, 3, 2, 1) and sqrt(24) * (1, 1/2, 1/3, 1/4) share the product multiset
        alt = sort_magnitudes(pairwise_products((4, 3, 2, 1)), np.sqrt(24))
        np.testing.assert_allclose(alt, np.sqrt(24) / np.arange(1, 5), rtol=1e-12)

    def test_leftover_is_consistency_error(self):
        assert issubclass(LeftoverError, ConsistencyError)

    def test_not_triangular(self):
        with pytest.raises(ValueError):
            sort_magnitudes([1, 2], 1)

    def test_pair_count(self):
        assert [sparsity_from_pair_count(n) for n in (1, 3, 6, 10, 15)] == [2, 3, 4, 5, 6]


class TestA1Candidates:
    def test_three(self):
        np.testing.assert_allclose(enumerate_a1_candidates([6, 3, 2], 3), [3])

    def test_four(self):
        np.testing.assert_allclose(enumerate_a1_candidates([12, 8, 6, 4, 3, 2], 4), [4, np.sqrt(24)])

    def test_reference(self):
        cands = enumerate_a1_candidates(pairwise_products(REF_MODULI), 5)
        assert cands.size == 3
        assert np.min(np.abs(cands - 2.2056)) <= 1e-6

    def test_needs_r3(self):
        with pytest.raises(ValueError):
            enumerate_a1_candidates([20], 2)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(3, 6), st.integers(0, 2**32 - 1))
    def test_contains_true_a1(self, r, seed):
        mod = np.sort(np.random.default_rng(seed).uniform(0.05, 3.0, r))[::-1]
        cands = enumerate_a1_candidates(pairwise_products(mod), r)
        assert np.min(np.abs(cands - mod[0])) <= 1e-12 * mod[0]


class TestModuliFromTwo:
    def test_quadratic(self):
        np.testing.assert_allclose(moduli_from_two(5.0, 2.0), [2.0, 1.0])

    def test_equal_moduli(self):
        with pytest.raises(ConsistencyError):
            moduli_from_two(2.0, 1.0)


class TestLabelProducts:
    def test_r2(self):
        corr = CorrelationSet(np.array([0.25, -0.25]), np.array([2.0, 2.0]), 5.0)
        p = label_products([2, 1], corr)
        assert (p.i.tolist(), p.l.tolist()) == ([0], [1])
        np.testing.assert_allclose(p.distances, [0.25])

    def test_r3(self):
        taus = np.array([0.05, 0.2, 0.3])
        coeffs = np.array([3.0, 2.0, 6.0])
        corr = CorrelationSet(np.concatenate((taus, -taus)), np.concatenate((coeffs, coeffs)), 14.0)
        p = label_products([3, 2, 1], corr)
        got = {(int(i), int(l)): (float(pr), float(t)) for i, l, pr, t in zip(p.i, p.l, p.products, p.tau)}
        assert got == {(0, 1): (6.0, 0.3), (0, 2): (3.0, 0.05), (1, 2): (2.0, 0.2)}

    def test_collision(self):
        prods = pairwise_products((6, 3, 2, 1))
        taus = np.linspace(0.05, 0.3, 6)
        corr = CorrelationSet(np.concatenate((taus, -taus)), np.concatenate((prods, prods)), 50.0)
        with pytest.raises(CollisionError):
            label_products([6, 3, 2, 1], corr)

    def test_collision_tol_separate_from_matching_tol(self):
        # products 6 and 5.97 are distinct at 1e-6 even when matching is loose
        taus = np.array([0.05, 0.2, 0.3])
        coeffs = np.array([5.97, 3.98, 6.0])
        corr = CorrelationSet(np.concatenate((taus, -taus)), np.concatenate((coeffs, coeffs)), 50.0)
        p = label_products([3, 2, 1.99], corr, rel_tol=1e-2, collision_tol=1e-6)
        np.testing.assert_allclose(p.tau, [0.3, 0.05, 0.2])
        with pytest.raises(CollisionError):
            label_products([3, 2, 1.99], corr, rel_tol=1e-2)

    def test_mismatch(self):
        taus = np.array([0.05, 0.2, 0.3])
        corr = CorrelationSet(np.concatenate((taus, -taus)), np.array([3, 2, 7, 3, 2, 7.0]), 14.0)
        with pytest.raises(LabelingError):
            label_products([3, 2, 1], corr)


class TestSolveLocations:
    def test_r2(self):
        sols = solve_locations(_pairs([2, 1], [0.25]))
        assert {tuple(np.round(s.t, 12)) for s in sols} == {(0.0, 0.25), (0.25, 0.0)}

    def test_r3(self):
        # |t1 - t2| = 0.1, |t1 - t3| = 0.3, |t2 - t3| = 0.2
        sols = solve_locations(_pairs([3, 2, 1], [0.1, 0.3, 0.2]))
        got = sorted(tuple(np.round(s.t, 12)) for s in sols)
        assert got == [(0.0, 0.1, 0.3), (0.3, 0.2, 0.0)]
        assert {s.branch for s in sols} == {1, -1}

    def test_not_embeddable(self):
        # triangle inequality holds strictly, so no 1-D embedding
        with pytest.raises(RankError):
            solve_locations(_pairs([3, 2, 1], [0.1, 0.1, 0.15]))

    def test_box(self):
        with pytest.raises(BoxError):
            solve_locations(_pairs([2, 1], [0.6]))

    def test_reference(self):
        sig = reference_instance().canonicalize()
        pairs = label_products(np.abs(sig.amplitudes), exact_correlations(sig))
        t = sig.locations - sig.locations.min()
        errs = [min(np.max(np.abs(s.t - t)), np.max(np.abs(s.t - (t.max() - t)))) for s in solve_locations(pairs)]
        assert min(errs) <= 1e-6

    @pytest.mark.parametrize("r", [3, 4, 5, 6])
    def test_branches_reflect_and_rank_one(self, r):
        for seed in range(25):
            sig = generate_signal(r, seed, 0.01 if r == 6 else 0.02).canonicalize()
            pairs = label_products(np.abs(sig.amplitudes), exact_correlations(sig))
            plus, minus = solve_locations(pairs, rank_tol=1e-8, distance_tol=1e-8)
            s = plus.t + minus.t
            assert np.ptp(s) <= 1e-12
            for sol in (plus, minus):
                err = np.abs(np.abs(sol.t[pairs.i] - sol.t[pairs.l]) - pairs.distances)
                assert np.max(err) <= 1e-8
                assert sol.t.min() == 0.0


class TestSolvePhases:
    def test_real_positive(self):
        sig = SparseSignal([3.0, 2.0, 1.0], [0.0, 0.1, 0.3])
        pairs = label_products([3, 2, 1], exact_correlations(sig))
        for loc in solve_locations(pairs):
            np.testing.assert_allclose(solve_phases(pairs, loc), 0.0, atol=1e-12)

    def test_reference_signs(self):
        sig = reference_instance().canonicalize()
        pairs = label_products(np.abs(sig.amplitudes), exact_correlations(sig))
        signs = np.sign(sig.amplitudes.real)
        for loc in solve_locations(pairs):
            ph = solve_phases(pairs, loc)
            rel = np.exp(1j * ph) / np.exp(1j * ph[0])
            np.testing.assert_allclose(rel, signs / signs[0], atol=1e-12)

    def test_r2_complex_and_reflection(self):
        a = np.array([2.0, np.exp(1j * np.pi / 3)])
        sig = SparseSignal(a, [0.1, 0.35])
        pairs = label_products([2, 1], exact_correlations(sig))
        by_branch = {}
        for loc in solve_locations(pairs):
            by_branch[tuple(np.round(loc.t, 12))] = solve_phases(pairs, loc)
        np.testing.assert_allclose(by_branch[(0.0, 0.25)], [0, np.pi / 3], atol=1e-12)
        # reflected branch carries conjugated phases
        np.testing.assert_allclose(by_branch[(0.25, 0.0)], [0, -np.pi / 3], atol=1e-12)

    def test_inconsistent(self):
        sig = SparseSignal([3.0, 2.0j, 1.0], [0.0, 0.1, 0.3])
        corr = exact_correlations(sig)
        pairs = label_products([3, 2, 1], corr)
        bad = LabeledPairs(pairs.moduli, pairs.i, pairs.l, pairs.products, pairs.tau, pairs.coeff * [1, 1, 1j])
        with pytest.raises(PhaseInconsistencyError):
            solve_phases(bad, solve_locations(pairs)[0])


class TestStepTwoIdentity:
    def test_exact_correlations(self):
        cfg = RecoveryConfig(refine=False)
        worst = 0.0
        for n in range(200):
            r = 3 + n % 4
            sig = generate_signal(r, 500 + n, 0.01 if r == 6 else 0.02, complex_amplitudes=n % 2 == 1)
            samples = measure_intensities(sig, model_order(r))
            found = solve_from_correlations(samples, exact_correlations(sig), r, cfg)
            assert found, f"no candidate for r={r} seed={500 + n}"
            worst = max(worst, min(max(compare_solutions(c.signal, sig)) for c in found))
        assert worst <= 1e-9
