"""
End-to-end recovery: intensities -> every compatible (amplitudes, locations).
"""
from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.optimize import least_squares, linear_sum_assignment

from . import disentangle as dis
from .errors import DisentangleError, NoSolutionError, PencilError, SampleCountError, SparsityMismatchError
from .model import BOX_UPPER, IntensitySamples, SparseSignal, evaluate_fourier, model_order, threshold_samples
from .pencil import CorrelationSet, build_hankel, estimate_correlations, estimate_sparsity


@dataclass(frozen=True)
class RecoveryConfig:
    """Tolerance bundle for :func:`recover`.

    ``relax_factors`` lists multipliers applied to the matching tolerances
    (unit-circle test on the pencil eigenvalues, products, phases; the
    distance and rank-one gates use the squared factor); the next factor is only tried when the previous
    pass produced no valid solution. The validity test itself
    (``residual_tol``) is never relaxed.
    """

    rank_rel_tol: float = 1e-8
    modulus_tol: float = 1e-6
    extract_modulus_tol: float = 1e-3
    fit_tol: float = 1e-10
    product_rel_tol: float = 1e-6
    distance_tol: float = 1e-8
    rank1_tol: float = 1e-8
    phase_tol: float = 1e-6
    residual_tol: float = 1e-6
    dedup_tol: float = 1e-8
    refine: bool = True
    relax_factors: tuple[float, ...] = (1.0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6)

    def relaxed(self, factor: float) -> "RecoveryConfig":
        return replace(
            self,
            extract_modulus_tol=min(self.extract_modulus_tol * factor, 0.5),
            product_rel_tol=self.product_rel_tol * factor,
            # geometry gates relax faster; the never-relaxed residual check decides
            distance_tol=min(self.distance_tol * factor**2, 0.1),
            rank1_tol=min(self.rank1_tol * factor**2, 0.1),
            phase_tol=self.phase_tol * factor,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["relax_factors"] = list(self.relax_factors)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RecoveryConfig":
        d = dict(d)
        if "relax_factors" in d:
            d["relax_factors"] = tuple(d["relax_factors"])
        return cls(**d)


@dataclass(frozen=True, eq=False)
class CandidateSolution:
    signal: SparseSignal
    residual: float
    a1_hypothesis: float
    branch: int
    hypothesis: int = 0
    relax_factor: float = 1.0


@dataclass(eq=False)
class RecoveryReport:
    r: int
    solutions: list[CandidateSolution]
    diagnostics: list[dict] = field(default_factory=list)
    config: RecoveryConfig = field(default_factory=RecoveryConfig)

    @property
    def best(self) -> CandidateSolution:
        return self.solutions[0]


def validate_candidate(signal: SparseSignal, samples: IntensitySamples, rel_tol: float = 1e-6) -> float:
    """Normalized max intensity mismatch ``max |y_hat - y| / max(1, max y)``.

    A candidate is valid when this is at most ``rel_tol`` and :func:`in_box`
    holds; ``rel_tol`` is accepted for interface symmetry with :func:`is_valid`.
    """
    y_hat = np.abs(evaluate_fourier(signal, samples.k)) ** 2
    return float(np.max(np.abs(y_hat - samples.values)) / max(1.0, float(np.max(samples.values))))


def in_box(signal: SparseSignal) -> bool:
    return bool(np.all(signal.locations >= 0) and np.all(signal.locations < BOX_UPPER))


def is_valid(signal: SparseSignal, samples: IntensitySamples, rel_tol: float = 1e-6) -> bool:
    return in_box(signal) and validate_candidate(signal, samples) <= rel_tol


def _normalize(signal: SparseSignal) -> SparseSignal:
    """Shift to ``min(t) = 0`` and rotate so the largest spike has phase 0."""
    a = signal.amplitudes * np.exp(-1j * np.angle(signal.amplitudes[0]))
    return SparseSignal(a, signal.locations - np.min(signal.locations), canonical=signal.canonical)


def refine_candidate(signal: SparseSignal, samples: IntensitySamples) -> SparseSignal:
    """Gauss-Newton polish of (a, t) against the samples.

    Gauge fixed by holding the first location and the first phase. Returns
    the input unchanged if the polish does not lower the residual.
    """
    r = signal.r
    k = samples.k.astype(float)
    scale = max(1.0, float(np.max(samples.values)))
    t0 = signal.locations[0]
    a0 = signal.amplitudes

    def unpack(x):
        t = np.concatenate(([t0], x[: r - 1]))
        a = x[r - 1 : 2 * r - 1] + 0j
        a[1:] += 1j * x[2 * r - 1 :]
        return t, a

    def fun(x):
        t, a = unpack(x)
        return (np.abs(np.exp(-2j * np.pi * np.outer(k, t)) @ a) ** 2 - samples.values) / scale

    def jac(x):
        t, a = unpack(x)
        e = np.exp(-2j * np.pi * np.outer(k, t))
        xh = np.conj(e @ a)[:, None]
        d_t = 2 * np.real(xh * e * a * (-2j * np.pi * k[:, None]))
        d_re = 2 * np.real(xh * e)
        d_im = 2 * np.real(xh * 1j * e)
        return np.hstack((d_t[:, 1:], d_re, d_im[:, 1:])) / scale

    phase0 = np.exp(-1j * np.angle(a0[0]))
    a_rot = a0 * phase0
    x0 = np.concatenate((signal.locations[1:], a_rot.real, a_rot.imag[1:]))
    before = np.max(np.abs(fun(x0)))
    try:
        sol = least_squares(fun, x0, jac=jac, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=200)
    except (ValueError, np.linalg.LinAlgError):
        return signal
    if not np.all(np.isfinite(sol.x)) or np.max(np.abs(fun(sol.x))) >= before:
        return signal
    t, a = unpack(sol.x)
    return _normalize(SparseSignal(a, t, canonical=signal.canonical))


def _permutations(r: int):
    if r <= 7:
        return np.array(list(itertools.permutations(range(r))), dtype=int)
    return None


def compare_solutions(found: SparseSignal, truth: SparseSignal) -> tuple[float, float]:
    """(location error, amplitude error) after removing the unobservable symmetries.

    Minimizes over reflection, index permutation, global shift and global
    phase; shift and phase are fitted in closed form (mean offset, phase of
    ``sum found_i conj(truth_i)``). Permutations are exhaustive for r <= 7 and
    matched by amplitude modulus beyond that.
    """
    if found.r != truth.r:
        raise SparsityMismatchError(f"sparsity mismatch: {found.r} vs {truth.r}")
    r = truth.r
    ta, tt = truth.amplitudes, truth.locations
    perms = _permutations(r)
    if perms is None:
        cost = np.abs(np.abs(found.amplitudes)[None, :] - np.abs(ta)[:, None])
        perms = linear_sum_assignment(cost)[1][None, :]
    best = (np.inf, np.inf)
    for reflect in (False, True):
        fa = np.conj(found.amplitudes) if reflect else found.amplitudes
        ft = -found.locations if reflect else found.locations
        pa = fa[perms]  # (P, r)
        pt = ft[perms]
        shift = np.mean(tt - pt, axis=1, keepdims=True)
        loc_err = np.max(np.abs(pt + shift - tt), axis=1)
        rot = np.exp(-1j * np.angle(np.sum(pa * np.conj(ta), axis=1, keepdims=True)))
        amp_err = np.max(np.abs(pa * rot - ta), axis=1)
        j = int(np.argmin(np.maximum(loc_err, amp_err)))
        if max(loc_err[j], amp_err[j]) < max(best):
            best = (float(loc_err[j]), float(amp_err[j]))
    return best


def _solve_r1(samples: IntensitySamples, config: RecoveryConfig) -> RecoveryReport:
    signal = SparseSignal([np.sqrt(samples.at(0))], [0.0], canonical=True)
    res = validate_candidate(signal, samples)
    if res > config.residual_tol:
        raise NoSolutionError(
            "samples are not constant; no single-spike signal fits",
            [{"stage": "validate", "reason": f"residual {res:.3e}"}],
        )
    return RecoveryReport(1, [CandidateSolution(signal, res, float(signal.amplitudes[0].real), 1)], [], config)


def _hypotheses(correlations, r: int) -> np.ndarray:
    _, coeff = correlations.positive_half()
    products = np.abs(coeff)
    if r == 2:
        return dis.moduli_from_two(correlations.dc_power, float(products[0]))[:1]
    return dis.enumerate_a1_candidates(products, r)


def solve_from_correlations(
    samples: IntensitySamples,
    correlations: CorrelationSet,
    r: int,
    config: RecoveryConfig | None = None,
    *,
    relax_factor: float = 1.0,
    collision_tol: float | None = None,
    diagnostics: list | None = None,
) -> list[CandidateSolution]:
    """Step 2 for every ``|a_1|`` hypothesis and both branches; returns the validated candidates.

    ``config`` is used as given (already relaxed); ``relax_factor`` only tags
    the results. Rejected hypotheses are appended to ``diagnostics``.
    """
    cfg = config or RecoveryConfig()
    factor = relax_factor
    collision_tol = cfg.product_rel_tol if collision_tol is None else collision_tol
    diagnostics = [] if diagnostics is None else diagnostics
    _, coeff = correlations.positive_half()
    products = np.abs(coeff)
    found = []
    for h, a1 in enumerate(_hypotheses(correlations, r)):
        diag = {"relax_factor": factor, "hypothesis": h, "a1": float(a1)}
        try:
            moduli = dis.sort_magnitudes(products, a1, cfg.product_rel_tol)
            pairs = dis.label_products(moduli, correlations, cfg.product_rel_tol, collision_tol)
            locations = dis.solve_locations(pairs, cfg.rank1_tol, cfg.distance_tol)
        except DisentangleError as exc:
            diagnostics.append({**diag, "stage": type(exc).__name__, "reason": str(exc)})
            continue
        for loc in locations:
            bdiag = {**diag, "branch": loc.branch}
            try:
                phases = dis.solve_phases(pairs, loc, cfg.distance_tol, cfg.phase_tol)
            except DisentangleError as exc:
                diagnostics.append({**bdiag, "stage": type(exc).__name__, "reason": str(exc)})
                continue
            signal = SparseSignal(moduli * np.exp(1j * phases), loc.t, canonical=True)
            if cfg.refine:
                signal = refine_candidate(signal, samples)
            residual = validate_candidate(signal, samples)
            if not in_box(signal):
                diagnostics.append({**bdiag, "stage": "validate", "reason": "locations outside [0, 0.5)"})
            elif residual > cfg.residual_tol:
                diagnostics.append({**bdiag, "stage": "validate", "reason": f"residual {residual:.3e}"})
            else:
                found.append(CandidateSolution(signal, residual, float(a1), loc.branch, h, factor))
    return found


def recover(
    samples: IntensitySamples,
    r: int | None = None,
    config: RecoveryConfig | None = None,
    *,
    estimate_r: bool = False,
) -> RecoveryReport:
    """Recover every spike train compatible with ``samples``.

    All ``|a_1|`` hypotheses and both location branches are evaluated; valid
    candidates are deduplicated modulo shift, global phase and reflection and
    sorted by residual.

    Raises:
        SampleCountError: fewer than ``2 r^2 - 2 r + 2`` samples.
        NoSolutionError: no hypothesis validated; carries the diagnostics.
    """
    config = config or RecoveryConfig()
    if r is None:
        if not estimate_r:
            raise ValueError("r is required unless estimate_r is set")
        r = estimate_sparsity(build_hankel(samples), config.rank_rel_tol)
    if r < 1:
        raise ValueError(f"r must be positive, got {r}")
    need = threshold_samples(r)
    if samples.m < need:
        raise SampleCountError(f"r={r} needs at least {need} samples, got m={samples.m}")
    if r == 1:
        return _solve_r1(samples, config)

    diagnostics: list[dict] = []
    found: list[CandidateSolution] = []
    for factor in config.relax_factors:
        cfg = config.relaxed(factor)
        try:
            correlations = estimate_correlations(
                samples, model_order(r), cfg.rank_rel_tol, cfg.modulus_tol, cfg.fit_tol, cfg.extract_modulus_tol
            )
        except PencilError as exc:
            diagnostics.append({"relax_factor": factor, "stage": type(exc).__name__, "reason": str(exc)})
            continue
        # distinguishability of products is a property of the hypothesis, not of
        # the estimation error, so the collision test keeps the strict tolerance
        found = solve_from_correlations(
            samples,
            correlations,
            r,
            cfg,
            relax_factor=factor,
            collision_tol=config.product_rel_tol,
            diagnostics=diagnostics,
        )
        if found:
            break
    if not found:
        raise NoSolutionError(f"no valid solution among all |a_1| hypotheses (r={r})", diagnostics)

    found.sort(key=lambda c: (c.residual, c.hypothesis, -c.branch))
    unique: list[CandidateSolution] = []
    for cand in found:
        if any(max(compare_solutions(cand.signal, u.signal)) <= config.dedup_tol for u in unique):
            continue
        unique.append(cand)
    return RecoveryReport(r, unique, diagnostics, config)
