"""
Degrees-of-freedom bookkeeping and relay antenna requirements.

Every threshold is computed with integers or :class:`fractions.Fraction`
so boundary cases (e.g. K=4, M=3, N=7) never depend on rounding.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import InvalidInputError
from .scenario import as_switch_matrix, effective_antennas, validate_switch_matrix

__all__ = [
    "FeasibilityReport",
    "total_dof_upper_bound",
    "per_node_bound",
    "pair_requirement",
    "min_relay_antennas",
    "min_relay_antennas_closed_form",
    "theorem1_threshold",
    "prior_threshold",
    "region_points",
    "is_star",
    "analyze",
]

EQUAL_ANTENNAS = "equal-antennas"
STAR = "star"
GENERAL = "general"


def total_dof_upper_bound(scenario) -> int:
    """``min{sum M, 2 * sum_{i>=2} M_i, 2N}`` on the original antennas."""
    M = effective_antennas(scenario).M
    return min(sum(M), 2 * sum(M[1:]), 2 * scenario.N)


def per_node_bound(scenario, i: int) -> int:
    """DoF bound ``min{M_i, sum_{j != i} M_j, N}`` of internal node `i` (0-based)."""
    M = effective_antennas(scenario).M
    if not 0 <= i < len(M):
        raise InvalidInputError(f"node index {i} out of range")
    return min(M[i], sum(M) - M[i], scenario.N)


def pair_requirement(M_eff, D, s: int, t: int) -> int:
    """Relay antennas needed for pair (s, t): ``sum M - M_s - M_t + d_st``."""
    return sum(M_eff) - M_eff[s] - M_eff[t] + int(D[s][t])


def _checked_switch(D, scenario):
    eff = effective_antennas(scenario)
    D = as_switch_matrix(D, eff.K)
    problems = validate_switch_matrix(D, eff, enforce_row_sums=True)
    if problems:
        raise InvalidInputError("invalid data switch matrix: " + "; ".join(problems))
    return D, eff


def min_relay_antennas(D, scenario):
    """Minimum relay antennas for switch matrix `D` (delete-and-sum chart).

    For every nonzero ``d[i][j]`` the i-th row and j-th column are removed
    and the remaining entries summed; the answer is the largest such sum.

    Returns
    -------
    (int, tuple)
        The requirement and the first (0-based, s < t) pair attaining it.

    Raises
    ------
    InvalidInputError
        If `D` is not symmetric, zero-diagonal with row sums equal to the
        effective antennas.
    """
    D, _ = _checked_switch(D, scenario)
    K = D.shape[0]
    best, pair = None, None
    for i in range(K):
        for j in range(K):
            if D[i, j] == 0:
                continue
            T = np.delete(np.delete(D, i, axis=0), j, axis=1)
            n_ij = int(T.sum())
            if best is None or n_ij > best:
                best, pair = n_ij, (min(i, j), max(i, j))
    if best is None:
        return 0, None
    return best, pair


def min_relay_antennas_closed_form(D, scenario):
    """Same quantity as :func:`min_relay_antennas` via the per-pair formula."""
    D, eff = _checked_switch(D, scenario)
    K = D.shape[0]
    best, pair = 0, None
    for s in range(K):
        for t in range(s + 1, K):
            if D[s, t]:
                req = pair_requirement(eff.M_eff, D, s, t)
                if pair is None or req > best:
                    best, pair = req, (s, t)
    return best, pair


def theorem1_threshold(K: int, M: int) -> Fraction:
    """Equal-antenna relay threshold ``(K^2 - 3K + 3) M / (K - 1)``."""
    if K < 2 or M < 1:
        raise InvalidInputError("need K >= 2 and M >= 1")
    return Fraction((K * K - 3 * K + 3) * M, K - 1)


def prior_threshold(K: int, M: int) -> Fraction:
    """Earlier signal-alignment threshold ``(K^2 - 2K) M / (K - 1)``."""
    if K < 2 or M < 1:
        raise InvalidInputError("need K >= 2 and M >= 1")
    return Fraction((K * K - 2 * K) * M, K - 1)


def region_points(K: int) -> dict:
    """Corner points of the equal-antenna achievable region, in units of N/M.

    ``Q`` is the DoF value at the P1/P2 corners per unit M.
    """
    den = K * K - K + 2
    return {
        "P1": Fraction(2 * K * K - 2 * K, den),
        "P2": Fraction(4 * K * K - 8 * K, den),
        "P3": theorem1_threshold(K, 1),
        "P4": prior_threshold(K, 1),
        "Q": Fraction(4 * K * K - 4 * K, den),
    }


def is_star(D) -> bool:
    """True if only node 0 exchanges streams (every active pair contains it)."""
    D = np.asarray(D)
    return bool(D.any()) and not D[1:, 1:].any()


@dataclass
class FeasibilityReport:
    """Outcome of :func:`analyze`.  Pairs and node lists use user labels."""

    K: int
    M: list
    M_eff: list
    N: int
    total_upper_bound: int
    per_node_bounds: list
    min_N_required: Optional[int]
    binding_pair: Optional[list]
    theorem_applied: str
    feasible_at_N: bool
    gsa_regime: bool
    total_relay_streams: Optional[int]
    achieved_dof: Optional[int]
    theorem1_threshold: Optional[str] = None
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def analyze(scenario, D=None) -> FeasibilityReport:
    """Aggregate bounds and the relay requirement for one instance.

    `D` defaults to ``scenario.D`` and is in internal node order.
    """
    eff = effective_antennas(scenario)
    base = eff.base
    if D is None:
        D = base.D
    K, M, N = eff.K, list(eff.M), eff.N
    notes = []

    equal = len(set(M)) == 1
    regime = all(N > M[i] + M[j] for i in range(K) for j in range(i + 1, K))
    if not regime:
        notes.append("N > M_i + M_j does not hold for every pair (outside the GSA regime)")
    if eff.deactivated:
        notes.append(f"{eff.deactivated} antenna(s) deactivated at node {base.labels[0]}")

    t1 = None
    if equal and K >= 3:
        thr = theorem1_threshold(K, M[0])
        t1 = str(thr)
        if thr.denominator != 1:
            notes.append(
                f"threshold {thr} is fractional; streams per pair need a "
                f"{K - 1}-symbol extension"
            )

    if equal:
        theorem = EQUAL_ANTENNAS
    elif D is not None and is_star(as_switch_matrix(D, K)) and M[0] >= sum(M[1:]):
        theorem = STAR
    else:
        theorem = GENERAL

    common = dict(
        K=K,
        M=base.user_order(M),
        M_eff=base.user_order(list(eff.M_eff)),
        N=N,
        total_upper_bound=total_dof_upper_bound(eff),
        per_node_bounds=base.user_order([per_node_bound(eff, i) for i in range(K)]),
        theorem_applied=theorem,
        gsa_regime=regime,
        theorem1_threshold=t1,
    )

    if sum(eff.M_eff) % 2:
        notes.append(
            f"sum of effective antennas {sum(eff.M_eff)} is odd: no symmetric "
            "switch matrix has these row sums"
        )
        return FeasibilityReport(
            min_N_required=None, binding_pair=None, feasible_at_N=False,
            total_relay_streams=None, achieved_dof=None, notes=notes, **common,
        )
    if D is None:
        raise InvalidInputError("scenario has no data switch matrix")

    n_req, pair = min_relay_antennas(D, eff)
    streams = int(np.asarray(D).sum()) // 2
    if streams > n_req:
        notes.append(
            f"{streams} network-coded streams exceed the per-pair requirement "
            f"{n_req}; the relay needs N >= {streams}"
        )
        n_req = streams
    feasible = N >= n_req
    if not feasible:
        notes.append(f"infeasible: N={N} < required {n_req}")
    return FeasibilityReport(
        min_N_required=n_req,
        binding_pair=list(base.label_pair(pair)) if pair else None,
        feasible_at_N=feasible,
        total_relay_streams=streams,
        achieved_dof=2 * streams if feasible else None,
        notes=notes,
        **common,
    )
