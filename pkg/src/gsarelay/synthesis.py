"""
Data switch matrix synthesis from target row sums.

A symmetric zero-diagonal nonnegative integer matrix with row sums ``d``
is the adjacency matrix of a loopless multigraph with degree sequence
``d``; one exists iff ``sum(d)`` is even and ``max(d) <= sum(d) - max(d)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterator, Sequence

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from .errors import InfeasibleRequestError, InvalidInputError

__all__ = [
    "SynthesisRequest",
    "OBJECTIVES",
    "check_realizable",
    "synthesize",
    "required_relay_antennas",
    "enumerate_switch_matrices",
]

OBJECTIVES = ("any-valid", "minimize-required-N")


@dataclass(frozen=True)
class SynthesisRequest:
    M_eff: tuple
    objective: str = "any-valid"

    def __post_init__(self):
        object.__setattr__(self, "M_eff", tuple(int(m) for m in self.M_eff))
        if self.objective not in OBJECTIVES:
            raise InvalidInputError(f"objective must be one of {OBJECTIVES}")


def check_realizable(d: Sequence[int]) -> None:
    """Raise InfeasibleRequestError naming the violated condition."""
    d = [int(v) for v in d]
    if len(d) < 2:
        raise InvalidInputError("need at least two nodes")
    if min(d) < 0:
        raise InvalidInputError("row sums must be nonnegative")
    total = sum(d)
    if total % 2:
        raise InfeasibleRequestError(f"parity: row sums add up to odd {total}")
    if max(d) > total - max(d):
        raise InfeasibleRequestError(
            f"realizability: largest row sum {max(d)} exceeds the sum of the others "
            f"{total - max(d)}"
        )


def required_relay_antennas(D, M_eff=None) -> int:
    """``max over active pairs of sum(M_eff) - M_s - M_t + d_st``.

    `M_eff` defaults to the row sums of `D`.
    """
    D = np.asarray(D)
    M = D.sum(axis=1) if M_eff is None else np.asarray(M_eff)
    S = int(M.sum())
    s, t = np.nonzero(np.triu(D, 1))
    if s.size == 0:
        return 0
    return int(np.max(S - M[s] - M[t] + D[s, t]))


def _greedy(d):
    K = len(d)
    rem = list(d)
    D = np.zeros((K, K), dtype=np.int64)
    while any(rem):
        u = max(range(K), key=lambda k: (rem[k], -k))
        v = max((k for k in range(K) if k != u), key=lambda k: (rem[k], -k))
        D[u, v] += 1
        D[v, u] += 1
        rem[u] -= 1
        rem[v] -= 1
    return D


def _min_required(d):
    """Integer program: minimize the largest pair requirement.

    Variables per pair (s < t): stream count x_st and activity y_st, plus
    the bound T.  ``T >= (S - d_s - d_t) y_st + x_st`` for each pair and
    ``y_st <= x_st <= cap * y_st`` tie activity to the streams.
    """
    K = len(d)
    S = sum(d)
    pairs = [(s, t) for s in range(K) for t in range(s + 1, K)]
    P = len(pairs)
    n = 2 * P + 1  # x..., y..., T
    c = np.zeros(n)
    c[-1] = 1.0

    rows, lo, hi = [], [], []
    for i in range(K):
        row = np.zeros(n)
        for p, (s, t) in enumerate(pairs):
            if i in (s, t):
                row[p] = 1.0
        rows.append(row)
        lo.append(d[i])
        hi.append(d[i])
    for p, (s, t) in enumerate(pairs):
        cap = min(d[s], d[t])
        row = np.zeros(n)
        row[p], row[P + p], row[-1] = 1.0, S - d[s] - d[t], -1.0
        rows.append(row)
        lo.append(-np.inf)
        hi.append(0.0)
        row = np.zeros(n)
        row[p], row[P + p] = 1.0, -cap
        rows.append(row)
        lo.append(-np.inf)
        hi.append(0.0)
        row = np.zeros(n)
        row[p], row[P + p] = 1.0, -1.0
        rows.append(row)
        lo.append(0.0)
        hi.append(np.inf)

    ub = np.array([min(d[s], d[t]) for s, t in pairs] + [1] * P + [S], dtype=float)
    res = milp(
        c,
        constraints=LinearConstraint(np.array(rows), lo, hi),
        integrality=np.ones(n),
        bounds=Bounds(np.zeros(n), ub),
    )
    if not res.success:
        raise InfeasibleRequestError(f"integer program failed: {res.message}")
    x = np.rint(res.x[:P]).astype(np.int64)
    D = np.zeros((K, K), dtype=np.int64)
    for p, (s, t) in enumerate(pairs):
        D[s, t] = D[t, s] = x[p]
    return D


def synthesize(request) -> np.ndarray:
    """Symmetric zero-diagonal integer matrix with row sums ``request.M_eff``.

    ``any-valid`` repeatedly joins the two nodes with the largest remaining
    demand.  ``minimize-required-N`` solves a small integer program for
    the matrix with the smallest relay antenna requirement.
    """
    if not isinstance(request, SynthesisRequest):
        request = SynthesisRequest(tuple(request))
    d = list(request.M_eff)
    check_realizable(d)
    if request.objective == "any-valid":
        return _greedy(d)
    return _min_required(d)


def enumerate_switch_matrices(d: Sequence[int], max_entry=None) -> Iterator[np.ndarray]:
    """Every symmetric zero-diagonal matrix with row sums `d` (brute force)."""
    d = [int(v) for v in d]
    K = len(d)
    pairs = [(s, t) for s in range(K) for t in range(s + 1, K)]
    caps = [min(d[s], d[t]) if max_entry is None else min(d[s], d[t], max_entry)
            for s, t in pairs]
    for values in product(*(range(c + 1) for c in caps)):
        sums = [0] * K
        for (s, t), v in zip(pairs, values):
            sums[s] += v
            sums[t] += v
        if sums == d:
            D = np.zeros((K, K), dtype=np.int64)
            for (s, t), v in zip(pairs, values):
                D[s, t] = D[t, s] = v
            yield D
