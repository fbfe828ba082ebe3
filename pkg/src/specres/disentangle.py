"""
Step 2: turn the unlabeled correlation set back into amplitudes and locations.

Given ``|a_1|``, the amplitude moduli follow greedily from the pairwise
products. Moduli label every product, hence every distance ``|t_i - t_l|``;
classical 1-D multidimensional scaling gives the locations up to shift and
reflection, and the oriented coefficients give the phases up to a global
rotation.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import linalg
from .errors import (
    BoxError,
    CollisionError,
    ConsistencyError,
    LabelingError,
    LeftoverError,
    PhaseInconsistencyError,
    RankError,
)
from .model import BOX_UPPER
from .pencil import CorrelationSet


def sparsity_from_pair_count(n: int) -> int:
    """Solve ``r (r - 1) / 2 = n`` for integer r."""
    r = int(round((1 + np.sqrt(1 + 8 * n)) / 2))
    if r * (r - 1) // 2 != n:
        raise ValueError(f"{n} is not a triangular number r(r-1)/2")
    return r


def sort_magnitudes(products, a1_modulus: float, rel_tol: float = 1e-6) -> np.ndarray:
    """Recover ``|a_1| > ... > |a_r|`` from the unordered products ``{|a_i a_l|}``.

    At step i the largest remaining product must be ``|a_1 a_i|``, which
    yields ``|a_i|``; the products ``|a_l a_i|`` for ``l < i`` are then removed.

    Raises:
        ConsistencyError: a product that should be present is missing, or the
            moduli stop decreasing (wrong ``|a_1|`` hypothesis).
        LeftoverError: products remain after all r moduli are assigned.
    """
    pool = sorted((float(p) for p in products), reverse=True)
    r = sparsity_from_pair_count(len(pool))
    if a1_modulus <= 0:
        raise ValueError("a1_modulus must be positive")
    moduli = [float(a1_modulus)]
    for i in range(1, r):
        if not pool:
            raise ConsistencyError(f"product set exhausted before |a_{i + 1}|")
        ai = pool[0] / moduli[0]
        if not ai < moduli[-1]:
            raise ConsistencyError(f"|a_{i + 1}| = {ai:.6g} does not decrease (previous {moduli[-1]:.6g})")
        for ml in moduli:
            target = ml * ai
            j = min(range(len(pool)), key=lambda q: abs(pool[q] - target), default=None)
            if j is None or abs(pool[j] - target) > rel_tol * target:
                raise ConsistencyError(f"product {target:.6g} not found for |a_{i + 1}|")
            del pool[j]
        moduli.append(ai)
    if pool:
        raise LeftoverError(f"{len(pool)} products left unassigned")
    return np.array(moduli)


def enumerate_a1_candidates(products, r: int) -> np.ndarray:
    """Candidate values of ``|a_1|``, one per choice of ``|a_2 a_3|``.

    The two largest products are ``|a_1 a_2|`` and ``|a_1 a_3|``; ``|a_2 a_3|``
    must be among the next r - 2, so each of those gives
    ``|a_1| = sqrt(p1 p2 / s)``. Ordered by descending ``s``.
    """
    if r < 3:
        raise ValueError(f"candidate enumeration needs r >= 3, got {r}")
    srt = np.sort(np.asarray(products, dtype=float))[::-1]
    if srt.size != r * (r - 1) // 2:
        raise ValueError(f"expected {r * (r - 1) // 2} products for r={r}, got {srt.size}")
    return np.sqrt(srt[0] * srt[1] / srt[2 : r])


def moduli_from_two(dc_power: float, product: float) -> np.ndarray:
    """r = 2: solve ``x^2 + y^2 = dc``, ``x y = product`` with ``x > y > 0``."""
    disc = dc_power ** 2 - 4 * product ** 2
    if disc <= 0:
        raise ConsistencyError("equal moduli or inconsistent DC power for r=2")
    big = np.sqrt(0.5 * (dc_power + np.sqrt(disc)))
    return np.array([big, product / big])


@dataclass(frozen=True, eq=False)
class LabeledPairs:
    """One entry per unordered pair ``i < l`` (0-based indices into the moduli).

    ``tau`` is the positive difference assigned to the pair and ``coeff`` the
    coefficient attached to ``+tau``; orientation is settled later by the
    location solution.
    """

    moduli: np.ndarray
    i: np.ndarray
    l: np.ndarray
    products: np.ndarray
    tau: np.ndarray
    coeff: np.ndarray

    @property
    def r(self) -> int:
        return self.moduli.size

    @property
    def distances(self) -> np.ndarray:
        return self.tau


def label_products(
    moduli,
    correlations: CorrelationSet,
    rel_tol: float = 1e-6,
    collision_tol: float | None = None,
) -> LabeledPairs:
    """Attach an index pair to every conjugate pair of correlation components.

    ``rel_tol`` bounds the relative product/coefficient mismatch of the
    assignment; ``collision_tol`` (default ``rel_tol``) is the relative gap
    below which two index pairs count as indistinguishable.

    Raises:
        CollisionError: two index pairs have products within ``collision_tol``.
        LabelingError: component count is wrong or some product has no
            component within ``rel_tol``.
    """
    moduli = np.asarray(moduli, dtype=float)
    r = moduli.size
    if np.any(np.diff(moduli) >= 0):
        raise ValueError("moduli must be strictly decreasing")
    tau, coeff = correlations.positive_half()
    if 2 * tau.size != correlations.taus.size or tau.size != r * (r - 1) // 2:
        raise LabelingError(f"expected {r * (r - 1)} components for r={r}, got {correlations.taus.size}")
    idx = np.array(list(combinations(range(r), 2)), dtype=int).reshape(-1, 2)
    prod = moduli[idx[:, 0]] * moduli[idx[:, 1]]

    collision_tol = rel_tol if collision_tol is None else collision_tol
    srt = np.sort(prod)
    if srt.size > 1 and np.any(np.diff(srt) <= collision_tol * srt[1:]):
        raise CollisionError("two index pairs have indistinguishable product moduli")

    mags = np.abs(coeff)
    cost = np.abs(mags[None, :] - prod[:, None]) / prod[:, None]
    rows, cols = linear_sum_assignment(cost)
    worst = np.max(cost[rows, cols]) if rows.size else 0.0
    if worst > rel_tol:
        raise LabelingError(f"product/coefficient mismatch {worst:.2e} exceeds {rel_tol:.0e}")
    order = np.empty_like(cols)
    order[rows] = cols
    return LabeledPairs(
        moduli=moduli,
        i=idx[:, 0],
        l=idx[:, 1],
        products=prod,
        tau=tau[order],
        coeff=coeff[order],
    )


@dataclass(frozen=True, eq=False)
class LocationSolution:
    t: np.ndarray
    branch: int  # +1 for +sqrt(lambda_1) u_1, -1 for the reflected branch
    shift: float


def solve_locations(pairs: LabeledPairs, rank_tol: float = 1e-8, distance_tol: float = 1e-8) -> list[LocationSolution]:
    """Both 1-D embeddings of the labeled distances, shifted so ``min(t) = 0``.

    Builds ``D_il = |t_i - t_l|^2``, centers it as ``G = -V D V / 2`` and keeps
    the top eigenpair; ``+-sqrt(lambda_1) u_1`` are the two branches.

    Raises:
        RankError: G is not numerically rank one, or an embedding fails to
            reproduce some distance within ``distance_tol``.
        BoxError: the embedding does not fit inside [0, 0.5).
    """
    r = pairs.r
    D = np.zeros((r, r))
    D[pairs.i, pairs.l] = pairs.distances ** 2
    D += D.T
    V = np.eye(r) - np.ones((r, r)) / r
    G = -V @ D @ V / 2
    w, U = linalg.eig_symmetric(G)
    if w[0] <= 0:
        raise RankError("centered Gram matrix has no positive eigenvalue")
    if r > 1 and np.max(np.abs(w[1:])) > rank_tol * w[0]:
        raise RankError(f"centered Gram matrix is not rank one: |lambda_2|/lambda_1 = {np.max(np.abs(w[1:])) / w[0]:.2e}")
    u = U[:, 0]
    u = u if u[np.argmax(np.abs(u))] > 0 else -u

    out = []
    for branch in (1, -1):
        raw = branch * np.sqrt(w[0]) * u
        shift = -float(np.min(raw))
        t = raw + shift
        err = np.max(np.abs(np.abs(t[pairs.i] - t[pairs.l]) - pairs.distances))
        if err > distance_tol:
            raise RankError(f"embedding misses a pairwise distance by {err:.2e}")
        out.append(LocationSolution(t=t, branch=branch, shift=shift))
    if np.max(out[0].t) >= BOX_UPPER:
        raise BoxError(f"embedding spans {np.max(out[0].t):.6g} >= {BOX_UPPER}")
    return out


def _wrap(phi):
    return np.angle(np.exp(1j * np.asarray(phi)))


def solve_phases(
    pairs: LabeledPairs,
    location: LocationSolution,
    tau_tol: float = 1e-8,
    phase_tol: float = 1e-6,
) -> np.ndarray:
    """Amplitude phases with ``arg(a_1) = 0``.

    The sign of ``t_i - t_l`` decides whether the pair's ``+tau`` coefficient
    is ``a_i conj(a_l)`` or its conjugate. Phases are read along the star of
    pairs ``(1, i)`` and checked against every other pair.
    """
    t = location.t
    delta = t[pairs.i] - t[pairs.l]
    mismatch = np.abs(np.abs(delta) - pairs.tau)
    if np.any(mismatch > tau_tol):
        raise PhaseInconsistencyError(f"location solution misses a labeled difference by {np.max(mismatch):.2e}")
    phi = np.where(delta > 0, np.angle(pairs.coeff), -np.angle(pairs.coeff))

    phases = np.zeros(pairs.r)
    star = pairs.i == 0
    phases[pairs.l[star]] = -phi[star]
    rest = ~star
    if np.any(rest):
        err = np.abs(_wrap(phi[rest] - (phases[pairs.i[rest]] - phases[pairs.l[rest]])))
        if np.max(err) > phase_tol:
            raise PhaseInconsistencyError(f"phase relations inconsistent by {np.max(err):.2e} rad")
    return phases
