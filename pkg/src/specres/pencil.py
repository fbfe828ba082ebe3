"""
Step 1: harmonic retrieval on the intensity sequence.

The intensities form a sum of complex exponentials at every spike-position
difference ``t_i - t_l`` with weights ``a_i conj(a_l)``. A matrix pencil on the
(m_c + 1) x m_c Hankel matrix recovers that difference set without labels;
a least-squares fit then attaches a coefficient to each difference.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import linalg
from .errors import (
    IllConditionedError,
    MissingDCError,
    ModelOrderError,
    ModulusError,
    PairingError,
    SizeError,
)
from .model import IntensitySamples

DC_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class HankelPencil:
    """``Y[p, q] = y[p + q - m_c]`` for ``0 <= p <= m_c``, ``0 <= q < m_c``."""

    Y: np.ndarray

    @property
    def m_c(self) -> int:
        return self.Y.shape[1]

    @property
    def Y1(self) -> np.ndarray:
        return self.Y[:-1]

    @property
    def Y2(self) -> np.ndarray:
        return self.Y[1:]


@dataclass(frozen=True, eq=False)
class CorrelationSet:
    """Unlabeled autocorrelation components ``y[k] = dc + sum_q c_q exp(-j 2 pi tau_q k)``.

    ``taus``/``coeffs`` exclude the zero-difference (DC) term, whose
    coefficient ``sum |a_i|^2`` is kept separately in ``dc_power``. Components
    come in conjugate pairs ``(tau, c)``, ``(-tau, conj(c))``.
    """

    taus: np.ndarray
    coeffs: np.ndarray
    dc_power: float

    @property
    def order(self) -> int:
        return self.taus.size + 1

    @property
    def components(self) -> list[tuple[float, complex]]:
        return [(float(t), complex(c)) for t, c in zip(self.taus, self.coeffs)]

    def positive_half(self) -> tuple[np.ndarray, np.ndarray]:
        """The ``tau > 0`` member of every conjugate pair, sorted by tau."""
        mask = self.taus > 0
        order = np.argsort(self.taus[mask])
        return self.taus[mask][order], self.coeffs[mask][order]

    def model(self, k) -> np.ndarray:
        k = np.asarray(k)
        return self.dc_power + np.exp(-2j * np.pi * np.multiply.outer(k, self.taus)) @ self.coeffs


def build_hankel(samples: IntensitySamples) -> HankelPencil:
    if samples.m_c < 2:
        raise SizeError(f"the pencil needs m_c >= 2, got m_c={samples.m_c}")
    v = samples.values
    m_c = samples.m_c
    return HankelPencil(scipy.linalg.hankel(v[: m_c + 1], v[m_c:]))


def numerical_rank(pencil: HankelPencil, rel_tol: float = 1e-8) -> int:
    return linalg.numerical_rank(pencil.Y, rel_tol)


def estimate_sparsity(pencil: HankelPencil, rel_tol: float = 1e-8) -> int:
    """Smallest r with ``r^2 - r + 1 >= rank(Y)``. Best effort only."""
    rank = max(numerical_rank(pencil, rel_tol), 1)
    return int(np.ceil((1 + np.sqrt(4 * rank - 3)) / 2 - 1e-12))


def _largest(eigs: np.ndarray, K: int) -> np.ndarray:
    eigs = eigs[np.argsort(-np.abs(eigs), kind="stable")]
    if np.count_nonzero(np.abs(eigs) >= 0.5) < K:
        raise ModelOrderError(
            f"only {np.count_nonzero(np.abs(eigs) >= 0.5)} pencil eigenvalues have modulus >= 0.5, "
            f"expected model order {K}"
        )
    return eigs[:K]


def pencil_eigenvalues(
    pencil: HankelPencil,
    K: int,
    rank_rel_tol: float = 1e-8,
    modulus_tol: float = 1e-6,
    *,
    fallback: bool = True,
) -> np.ndarray:
    """The K largest-modulus eigenvalues of ``pinv(Y1) @ Y2``.

    With ``fallback`` set, a signal-subspace pencil is used instead whenever
    the direct pencil yields fewer than K eigenvalues within ``modulus_tol``
    of the unit circle.
    """
    if K > pencil.m_c:
        raise ModelOrderError(f"model order K={K} exceeds m_c={pencil.m_c}")
    try:
        eigs = _largest(linalg.eig_general(linalg.pinv(pencil.Y1, rank_rel_tol) @ pencil.Y2), K)
        if np.all(np.abs(np.abs(eigs) - 1) <= modulus_tol) or not fallback:
            return eigs
    except ModelOrderError:
        if not fallback:
            raise
    return subspace_eigenvalues(pencil, K)


def subspace_eigenvalues(pencil: HankelPencil, K: int, forward_backward: bool = True) -> np.ndarray:
    """Pencil restricted to the K-dimensional dominant column space of Y.

    With ``forward_backward`` the column space is estimated from
    ``[Y, J conj(Y) J]``, which is valid because every pole lies on the unit
    circle and is markedly more accurate when the singular values of Y
    spread over many decades.
    """
    Y = pencil.Y
    if forward_backward:
        Y = np.hstack((Y, np.conj(Y[::-1, ::-1])))
    f = linalg.svd(Y)
    if K > f.s.size:
        raise ModelOrderError(f"model order K={K} exceeds rank capacity {f.s.size}")
    us = f.u[:, :K]
    return linalg.eig_general(linalg.pinv(us[:-1], 1e-12) @ us[1:])


def extract_differences(eigenvalues, modulus_tol: float = 1e-3) -> np.ndarray:
    """``arg(lambda) / (2 pi)`` for each eigenvalue, in (-0.5, 0.5]."""
    lam = np.asarray(eigenvalues, dtype=complex)
    bad = np.abs(np.abs(lam) - 1) > modulus_tol
    if np.any(bad):
        raise ModulusError(f"{np.count_nonzero(bad)} eigenvalue(s) off the unit circle: {lam[bad]}")
    return np.angle(lam) / (2 * np.pi)


def _symmetrize(taus: np.ndarray) -> np.ndarray:
    """Snap the DC term to 0 and replace each (+tau, -tau') pair by its mean magnitude."""
    taus = np.asarray(taus, dtype=float)
    dc = int(np.argmin(np.abs(taus)))
    if abs(taus[dc]) >= DC_TOL:
        raise MissingDCError(f"no difference within {DC_TOL} of zero (closest: {taus[dc]:.3e})")
    rest = np.delete(taus, dc)
    pos = np.sort(rest[rest > 0])
    neg = np.sort(-rest[rest < 0])
    if pos.size != neg.size:
        raise PairingError(f"{pos.size} positive vs {neg.size} negative differences")
    mid = 0.5 * (pos + neg)
    if mid.size and np.max(np.abs(pos - neg)) > 1e-3:
        raise PairingError("differences are not symmetric under negation")
    return np.concatenate(([0.0], mid, -mid))


def solve_coefficients(samples: IntensitySamples, taus, cond_limit: float = 1e12) -> CorrelationSet:
    """Least-squares coefficients for the given differences over all m samples.

    The DC difference is the one nearest zero (it must lie within 1e-6);
    the remaining differences are paired as ``(+tau, -tau)`` and their
    coefficients averaged so that the result is exactly conjugate-symmetric.

    Raises:
        IllConditionedError: if the exponential design matrix has condition
            number above ``cond_limit`` (near-coincident differences).
        MissingDCError: if no difference lies near zero.
    """
    taus = _symmetrize(taus)
    if taus.size > samples.m:
        raise ModelOrderError(f"{taus.size} unknowns but only {samples.m} samples")
    gaps = np.diff(np.sort(taus))
    if gaps.size and np.min(gaps) < 1e-9:
        raise IllConditionedError("differences are not pairwise distinct")
    E = np.exp(-2j * np.pi * np.outer(samples.k, taus))
    f = linalg.svd(E)
    cond = f.s[0] / f.s[-1] if f.s[-1] > 0 else np.inf
    if cond > cond_limit:
        raise IllConditionedError(f"coefficient system condition number {cond:.2e} exceeds {cond_limit:.0e}")
    c = f.vh.conj().T @ ((f.u.conj().T @ samples.values) / f.s)

    p = (taus.size - 1) // 2
    c_pos = 0.5 * (c[1 : 1 + p] + np.conj(c[1 + p :]))
    return CorrelationSet(
        taus=taus[1:].copy(),
        coeffs=np.concatenate((c_pos, np.conj(c_pos))),
        dc_power=float(np.real(c[0])),
    )


def fit_residual(correlations: CorrelationSet, samples: IntensitySamples) -> float:
    """Max abs misfit of the exponential model, normalized by ``max(1, max y)``."""
    err = np.abs(correlations.model(samples.k) - samples.values)
    return float(np.max(err) / max(1.0, float(np.max(samples.values))))


def estimate_correlations(
    samples: IntensitySamples,
    K: int,
    rank_rel_tol: float = 1e-8,
    modulus_tol: float = 1e-6,
    fit_tol: float = 1e-10,
    extract_modulus_tol: float = 1e-3,
) -> CorrelationSet:
    """Run the whole of Step 1: Hankel, pencil, differences, coefficients.

    The direct pencil is tried first. If it fails, or its coefficient fit
    leaves a residual above ``fit_tol``, the signal-subspace pencil is also
    run and whichever route fits the samples better is returned.
    """
    pencil = build_hankel(samples)
    if K == 1:
        return solve_coefficients(samples, [0.0])

    results = []
    errors = []
    for route in ("direct", "subspace"):
        try:
            if route == "direct":
                eigs = pencil_eigenvalues(pencil, K, rank_rel_tol, modulus_tol, fallback=False)
            else:
                eigs = subspace_eigenvalues(pencil, K)
            corr = solve_coefficients(samples, extract_differences(eigs, extract_modulus_tol))
        except (ModelOrderError, ModulusError, MissingDCError, PairingError, IllConditionedError) as exc:
            errors.append(exc)
            continue
        res = fit_residual(corr, samples)
        results.append((res, corr))
        if route == "direct" and res <= fit_tol and np.all(np.abs(np.abs(eigs) - 1) <= modulus_tol):
            break
    if not results:
        raise errors[-1]
    return min(results, key=lambda rc: rc[0])[1]
