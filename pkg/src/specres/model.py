"""
Spike-train signal model, forward intensity map and the synthetic instance generator.

A signal is a finite sum of weighted Dirac spikes on [0, 1) whose locations are
restricted to [0, 0.5). Only the squared moduli of its low-pass Fourier
coefficients are observed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GenerationError

BOX_UPPER = 0.5
# Tolerance used to decide whether two floats "coincide" in the admissibility checks.
_COINCIDE_TOL = 1e-12


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SparseSignal:
    """Spike train ``x(t) = sum_l a_l delta(t - t_l)``.

    Construction only checks shapes and finiteness; model conditions are
    reported by :func:`check_admissibility` instead of being enforced here.
    """

    amplitudes: np.ndarray
    locations: np.ndarray
    canonical: bool = False

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.amplitudes, dtype=complex))
        t = np.atleast_1d(np.asarray(self.locations, dtype=float))
        if a.ndim != 1 or t.ndim != 1 or a.shape != t.shape or a.size == 0:
            raise ValueError(
                f"amplitudes and locations must be nonempty 1-D arrays of equal length, "
                f"got shapes {a.shape} and {t.shape}"
            )
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(t))):
            raise ValueError("signal parameters must be finite")
        object.__setattr__(self, "amplitudes", _readonly(a))
        object.__setattr__(self, "locations", _readonly(t))

    @property
    def r(self) -> int:
        return self.amplitudes.size

    def canonicalize(self) -> "SparseSignal":
        """Reorder spikes so that amplitude moduli are strictly decreasing."""
        order = np.argsort(-np.abs(self.amplitudes), kind="stable")
        return SparseSignal(self.amplitudes[order], self.locations[order], canonical=True)

    def __repr__(self):
        return f"SparseSignal(r={self.r}, a={self.amplitudes.tolist()}, t={self.locations.tolist()})"


@dataclass(frozen=True, eq=False)
class IntensitySamples:
    """Observed ``y[k] = |x_hat[k]|^2`` for ``k = -m_c, ..., m_c - 1``."""

    m_c: int
    values: np.ndarray

    def __post_init__(self):
        if int(self.m_c) != self.m_c or self.m_c < 1:
            raise ValueError(f"m_c must be a positive integer, got {self.m_c!r}")
        v = np.asarray(self.values, dtype=float)
        if v.shape != (2 * self.m_c,):
            raise ValueError(f"expected {2 * self.m_c} values for m_c={self.m_c}, got shape {v.shape}")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError("intensity values must be finite and nonnegative")
        object.__setattr__(self, "m_c", int(self.m_c))
        object.__setattr__(self, "values", _readonly(v))

    @property
    def m(self) -> int:
        return 2 * self.m_c

    @property
    def k(self) -> np.ndarray:
        return np.arange(-self.m_c, self.m_c)

    def at(self, k: int) -> float:
        return float(self.values[k + self.m_c])


@dataclass(frozen=True)
class AdmissibilityReport:
    ok: bool
    violations: tuple[str, ...] = field(default_factory=tuple)


def evaluate_fourier(signal: SparseSignal, k):
    """Fourier-series coefficient(s) ``sum_l a_l exp(-j 2 pi k t_l)``.

    ``k`` may be a scalar or an array of integers; the result has the same shape.
    """
    k_arr = np.asarray(k)
    phase = np.exp(-2j * np.pi * np.multiply.outer(k_arr, signal.locations))
    out = phase @ signal.amplitudes
    return complex(out) if k_arr.ndim == 0 else out


def measure_intensities(signal: SparseSignal, m_c: int) -> IntensitySamples:
    if m_c < 1:
        raise ValueError(f"m_c must be >= 1, got {m_c}")
    coeffs = evaluate_fourier(signal, np.arange(-m_c, m_c))
    return IntensitySamples(m_c, np.abs(coeffs) ** 2)


def _difference_violations(t: np.ndarray, diff_sep: float) -> list[str]:
    out = []
    r = t.size
    if r < 2:
        return out
    i, l = np.nonzero(~np.eye(r, dtype=bool))
    ordered = np.sort(t[i] - t[l])
    if np.any(np.diff(ordered) <= _COINCIDE_TOL):
        out.append("duplicate-differences")
    if diff_sep > 0:
        absdiff = np.concatenate(([0.0], np.abs(t[:, None] - t[None, :])[np.triu_indices(r, 1)]))
        distinct = np.sort(absdiff)
        distinct = distinct[np.concatenate(([True], np.diff(distinct) > _COINCIDE_TOL))]
        if distinct.size > 1 and np.min(np.diff(distinct)) < diff_sep:
            out.append("difference-separation")
    return out


def check_admissibility(signal: SparseSignal, diff_sep: float = 0.0) -> AdmissibilityReport:
    """Report which recovery conditions ``signal`` violates.

    Checked: locations inside [0, 0.5); nonzero, pairwise distinct amplitude
    moduli; pairwise distinct ordered differences; and, for ``diff_sep > 0``,
    a minimum gap of ``diff_sep`` between distinct elements of
    ``{|t_i - t_l|}`` (0 included).
    """
    violations = []
    t = signal.locations
    if np.any(t < 0) or np.any(t >= BOX_UPPER):
        violations.append("location-box")
    mod = np.abs(signal.amplitudes)
    if np.any(mod <= 0):
        violations.append("zero-amplitude")
    srt = np.sort(mod)
    if np.any(np.diff(srt) <= _COINCIDE_TOL * np.maximum(srt[1:], 1.0)):
        violations.append("equal-amplitude-moduli")
    violations.extend(_difference_violations(t, diff_sep))
    return AdmissibilityReport(ok=not violations, violations=tuple(violations))


def _moduli_gap_ok(a: np.ndarray, rel_gap: float) -> bool:
    mod = np.sort(np.abs(a))
    if mod[0] <= 0:
        return False
    return bool(np.all(np.diff(mod) >= rel_gap * mod[1:]))


def generate_signal(
    r: int,
    seed: int,
    diff_sep: float = 0.02,
    *,
    complex_amplitudes: bool = False,
    max_attempts: int = 100_000,
    moduli_rel_gap: float = 1e-3,
) -> SparseSignal:
    """Draw a random admissible r-spike signal.

    Locations are rejection-sampled uniformly in (0, 0.5) until the
    separation check passes; amplitudes are standard normal (independent
    real and imaginary parts when ``complex_amplitudes``) and redrawn until
    their moduli differ pairwise by at least ``moduli_rel_gap`` relative.

    Raises:
        GenerationError: if either rejection loop exceeds ``max_attempts``, or
            immediately when ``diff_sep`` cannot be met by any configuration.
    """
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    if diff_sep < 0:
        raise ValueError("diff_sep must be nonnegative")
    # r(r-1)/2 distinct positive differences plus 0, all inside [0, 0.5).
    if diff_sep > 0 and r * (r - 1) / 2 * diff_sep >= BOX_UPPER:
        raise GenerationError(
            f"no r={r} configuration can satisfy diff_sep={diff_sep}: "
            f"{r * (r - 1) // 2} gaps of {diff_sep} exceed the box width {BOX_UPPER}"
        )
    rng = np.random.default_rng(seed)

    for _ in range(max_attempts):
        t = rng.uniform(0.0, BOX_UPPER, size=r)
        if np.all(t > 0) and not _difference_violations(t, diff_sep):
            break
    else:
        raise GenerationError(f"location sampling exceeded {max_attempts} attempts (r={r}, diff_sep={diff_sep})")

    for _ in range(max_attempts):
        a = rng.standard_normal(r)
        if complex_amplitudes:
            a = a + 1j * rng.standard_normal(r)
        if _moduli_gap_ok(a, moduli_rel_gap):
            break
    else:
        raise GenerationError(f"amplitude sampling exceeded {max_attempts} attempts")

    return SparseSignal(a, t)


def reference_instance() -> SparseSignal:
    """Five-spike golden instance with real amplitudes (two negative)."""
    return SparseSignal(
        [0.4296, 0.5160, 0.9052, -0.0785, -2.2056],
        [0.0092, 0.1411, 0.3435, 0.3735, 0.4463],
    )


def threshold_samples(r: int) -> int:
    """Minimum number of intensity samples, ``2 r^2 - 2 r + 2``."""
    return 2 * r * r - 2 * r + 2


def model_order(r: int) -> int:
    """Number of distinct exponentials in the intensity sequence, ``r^2 - r + 1``."""
    return r * r - r + 1

