"""
Brute-force reference checks that share no code path with the pipeline.

``brute_force_moduli`` searches every way of explaining a product multiset by
a decreasing moduli vector; ``independent_residual`` evaluates intensities
through the autocorrelation double sum instead of squaring the Fourier
coefficients.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from itertools import permutations
from math import sqrt

from .model import IntensitySamples, SparseSignal

MAX_R = 6


@dataclass(frozen=True)
class OracleResult:
    """Every strictly decreasing moduli vector whose pairwise products reproduce the input.

    ``parametric`` is set when the products underdetermine the moduli
    (r <= 2): any ``(x, p / x)`` with ``x > sqrt(p)`` fits, so no list is given.
    """

    consistent_assignments: list[tuple[float, ...]] = field(default_factory=list)
    parametric: bool = False

    @property
    def count(self) -> int:
        return len(self.consistent_assignments)


def _close(x: float, y: float, rel: float) -> bool:
    return abs(x - y) <= rel * max(abs(x), abs(y))


def _take(pool: list[float], value: float, rel: float) -> bool:
    for j, p in enumerate(pool):
        if _close(p, value, rel):
            del pool[j]
            return True
    return False


def _extend(moduli, pool, r, rel, out):
    if len(moduli) == r:
        if not pool:
            out.append(tuple(moduli))
        return
    tried = []
    for p in pool:
        ak = p / moduli[0]
        if not ak < moduli[-1] or any(_close(ak, q, rel) for q in tried):
            continue
        tried.append(ak)
        rest = list(pool)
        if all(_take(rest, m * ak, rel) for m in moduli):
            _extend(moduli + [ak], rest, r, rel, out)


def brute_force_moduli(products, r: int, rel_tol: float = 1e-9) -> OracleResult:
    """Exhaustive search for moduli consistent with the product multiset.

    Every ordered triple of products is tried as ``(|a1 a2|, |a1 a3|, |a2 a3|)``,
    fixing ``|a1|``; remaining moduli are grown by backtracking over the
    unused products, with every required product checked off the multiset.
    """
    if r > MAX_R:
        raise ValueError(f"brute force is limited to r <= {MAX_R}, got r={r}")
    pool = [float(p) for p in products]
    if len(pool) != r * (r - 1) // 2:
        raise ValueError(f"expected {r * (r - 1) // 2} products for r={r}, got {len(pool)}")
    if r <= 2:
        return OracleResult([], parametric=True)

    found: list[tuple[float, ...]] = []
    for x, y, z in permutations(range(len(pool)), 3):
        p12, p13, p23 = pool[x], pool[y], pool[z]
        a1 = sqrt(p12 * p13 / p23)
        a2, a3 = p12 / a1, p13 / a1
        if not a1 > a2 > a3 > 0:
            continue
        rest = [p for q, p in enumerate(pool) if q not in (x, y, z)]
        _extend([a1, a2, a3], rest, r, rel_tol, found)

    unique: list[tuple[float, ...]] = []
    for cand in found:
        if not any(all(_close(u, v, rel_tol) for u, v in zip(cand, seen)) for seen in unique):
            unique.append(cand)
    return OracleResult(sorted(unique, reverse=True))


def pairwise_products(moduli) -> list[float]:
    m = list(moduli)
    return [m[i] * m[l] for i in range(len(m)) for l in range(i + 1, len(m))]


def autocorrelation_intensity(signal: SparseSignal, k: int) -> float:
    """``sum_i sum_l a_i conj(a_l) exp(-j 2 pi (t_i - t_l) k)`` as a plain double loop."""
    total = 0j
    for ai, ti in zip(signal.amplitudes.tolist(), signal.locations.tolist()):
        for al, tl in zip(signal.amplitudes.tolist(), signal.locations.tolist()):
            total += ai * al.conjugate() * cmath.exp(-2j * cmath.pi * (ti - tl) * k)
    return total.real


def independent_residual(signal: SparseSignal, samples: IntensitySamples) -> float:
    """Same normalization as the pipeline's residual, evaluated term by term."""
    worst = 0.0
    for k, y in zip(range(-samples.m_c, samples.m_c), samples.values.tolist()):
        worst = max(worst, abs(autocorrelation_intensity(signal, k) - y))
    return worst / max(1.0, max(samples.values.tolist()))

