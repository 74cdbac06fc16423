"""
Problem instances: antenna configuration, data switch matrix and channels.

Nodes are stored internally in non-increasing antenna order (node 0 has the
most antennas).  ``Scenario.labels`` remembers the user-facing 1-based
label of every internal node so that reports and JSON round-trip in the
caller's numbering.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import matcore
from .errors import (
    DegenerateChannelError,
    InvalidInputError,
    NotRepresentableError,
)
from .matcore import DEFAULT_TOL, Tolerance

__all__ = [
    "Scenario",
    "EffectiveScenario",
    "ChannelSet",
    "as_switch_matrix",
    "validate_switch_matrix",
    "effective_antennas",
    "preset",
    "PRESET_KINDS",
    "y_channel_switch",
    "extend_scenario",
    "sample_channels",
    "instance_from_json",
    "scenario_from_json",
    "scenario_to_json",
]


def as_switch_matrix(D, K: Optional[int] = None) -> np.ndarray:
    """Coerce `D` to a read-only K x K int64 array.

    Raises InvalidInputError on wrong shape or non-integer entries.
    """
    arr = np.asarray(D)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidInputError(f"data switch matrix must be square, got {arr.shape}")
    if K is not None and arr.shape[0] != K:
        raise InvalidInputError(
            f"data switch matrix is {arr.shape[0]}x{arr.shape[0]}, scenario has K={K}"
        )
    if arr.dtype.kind not in "iu":
        if arr.dtype == object:
            vals = arr.ravel().tolist()
            if any(Fraction(v).denominator != 1 for v in vals):
                raise NotRepresentableError(
                    "data switch matrix has fractional entries; use symbol extension"
                )
        elif arr.dtype.kind == "f":
            if not np.all(np.isfinite(arr)) or np.any(arr != np.round(arr)):
                raise NotRepresentableError(
                    "data switch matrix has fractional entries; use symbol extension"
                )
        else:
            raise InvalidInputError(f"unsupported data switch matrix dtype {arr.dtype}")
    out = np.array(arr, dtype=np.int64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Scenario:
    """One problem instance in internal (sorted) node order.

    Use :meth:`Scenario.create` to build from user-ordered data; it sorts
    the nodes and records the permutation.

    Attributes
    ----------
    M : tuple of int
        Antennas per source node, non-increasing.
    N : int
        Relay antennas.
    D : numpy.ndarray or None
        Data switch matrix in internal order, ``D[i, j]`` streams i -> j.
    labels : tuple of int
        ``labels[k]`` is the 1-based user-facing label of internal node k.
    """

    M: tuple
    N: int
    D: Optional[np.ndarray] = None
    labels: tuple = ()

    def __post_init__(self):
        M = tuple(int(m) for m in self.M)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "N", int(self.N))
        if len(M) < 2:
            raise InvalidInputError("need at least K=2 source nodes")
        if min(M) < 1:
            raise InvalidInputError("every source node needs at least one antenna")
        if self.N < 1:
            raise InvalidInputError("relay needs at least one antenna")
        if any(a < b for a, b in zip(M, M[1:])):
            raise InvalidInputError(
                "M must be non-increasing; build with Scenario.create() to sort"
            )
        labels = tuple(self.labels) or tuple(range(1, len(M) + 1))
        if sorted(labels) != list(range(1, len(M) + 1)):
            raise InvalidInputError(f"labels {labels} are not a permutation of 1..K")
        object.__setattr__(self, "labels", labels)
        if self.D is not None:
            object.__setattr__(self, "D", as_switch_matrix(self.D, len(M)))

    @classmethod
    def create(cls, M: Sequence[int], N: int, D=None) -> "Scenario":
        """Build from user-ordered antennas and switch matrix.

        Nodes are stably re-sorted into non-increasing antenna order.
        """
        M = [int(m) for m in M]
        order = sorted(range(len(M)), key=lambda k: -M[k])
        Ds = None
        if D is not None:
            Dm = as_switch_matrix(D, len(M))
            Ds = Dm[np.ix_(order, order)]
        return cls(
            M=tuple(M[k] for k in order),
            N=N,
            D=Ds,
            labels=tuple(k + 1 for k in order),
        )

    @property
    def K(self) -> int:
        return len(self.M)

    def with_N(self, N: int) -> "Scenario":
        return Scenario(self.M, N, self.D, self.labels)

    def with_D(self, D) -> "Scenario":
        """Copy with an internally-ordered switch matrix."""
        return Scenario(self.M, self.N, D, self.labels)

    def user_order(self, values):
        """Reorder a per-node sequence from internal to user label order."""
        out = [None] * self.K
        for k, lab in enumerate(self.labels):
            out[lab - 1] = values[k]
        return out

    def user_D(self) -> Optional[np.ndarray]:
        """Switch matrix in user label order."""
        if self.D is None:
            return None
        inv = np.argsort(self.labels)
        return self.D[np.ix_(inv, inv)]

    def label_pair(self, pair):
        """Map an internal 0-based pair to a sorted 1-based user pair."""
        a, b = (self.labels[p] for p in pair)
        return (min(a, b), max(a, b))


@dataclass(frozen=True, eq=False)
class EffectiveScenario:
    """A scenario after antenna deactivation at the largest node."""

    base: Scenario
    M_eff: tuple
    deactivated: int

    @property
    def K(self):
        return self.base.K

    @property
    def N(self):
        return self.base.N

    @property
    def M(self):
        return self.base.M

    @property
    def D(self):
        return self.base.D


def effective_antennas(scenario) -> EffectiveScenario:
    """Deactivate antennas at node 1 beyond the sum of all the others.

    Idempotent: passing an EffectiveScenario returns an equal one.
    """
    base = scenario.base if isinstance(scenario, EffectiveScenario) else scenario
    M = base.M
    m1 = min(M[0], sum(M[1:]))
    return EffectiveScenario(base=base, M_eff=(m1,) + M[1:], deactivated=M[0] - m1)


def validate_switch_matrix(D, scenario, enforce_row_sums: bool = True) -> list:
    """List every violated switch-matrix invariant; empty means valid.

    `D` is in the scenario's internal node order.  Row sums are compared
    against the effective antenna counts.
    """
    eff = effective_antennas(scenario)
    D = as_switch_matrix(D, eff.K)
    problems = []
    if np.any(D < 0):
        problems.append("negative entries")
    if np.any(np.diag(D) != 0):
        problems.append("nonzero diagonal")
    if not np.array_equal(D, D.T):
        bad = [(i + 1, j + 1) for i, j in zip(*np.nonzero(D != D.T)) if i < j]
        problems.append(f"not symmetric at {bad}")
    if enforce_row_sums:
        sums = D.sum(axis=1)
        for i, (got, want) in enumerate(zip(sums, eff.M_eff)):
            if got != want:
                problems.append(f"row {i + 1} sums to {got}, expected {want}")
    return problems


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

PRESET_KINDS = ("y", "star", "xrelay", "multipair", "cluster")


def _antenna_vector(K, M):
    if np.ndim(M) == 0:
        if K is None:
            raise InvalidInputError("K is required when M is a scalar")
        return [int(M)] * int(K)
    M = [int(m) for m in M]
    if K is not None and len(M) != int(K):
        raise InvalidInputError(f"len(M)={len(M)} does not match K={K}")
    return M


def _equal_share(M, parts, what):
    if M % parts:
        raise NotRepresentableError(
            f"{what}: M={M} is not divisible by {parts}; streams per pair would be "
            f"fractional ({Fraction(M, parts)}), use symbol extension"
        )
    return M // parts


def y_channel_switch(K: int, M: int) -> list:
    """K-user Y channel switch matrix as exact fractions M/(K-1)."""
    share = Fraction(M, K - 1)
    return [[Fraction(0) if i == j else share for j in range(K)] for i in range(K)]


def extend_scenario(M: Sequence[int], N: int, D, factor: int) -> Scenario:
    """Scale antennas, relay and (possibly fractional) streams by `factor`.

    `M` and `D` are in user label order.  Raises NotRepresentableError if
    ``factor * D`` is not integral.
    """
    if factor < 1:
        raise InvalidInputError("extension factor must be >= 1")
    scaled = [[Fraction(v) * factor for v in row] for row in np.asarray(D, dtype=object)]
    if any(v.denominator != 1 for row in scaled for v in row):
        raise NotRepresentableError(
            f"factor {factor} does not make every stream count integral"
        )
    Dint = [[int(v) for v in row] for row in scaled]
    return Scenario.create([factor * int(m) for m in M], factor * int(N), Dint)


def preset(kind: str, **params) -> Scenario:
    """Named special-case channels.

    Parameters
    ----------
    kind : {'y', 'star', 'xrelay', 'multipair', 'cluster'}
    **params
        ``M`` (int or list) and ``N`` always; ``K`` when M is a scalar.
        ``pairs`` for multipair (1-based, default (1,2),(3,4),...),
        ``L`` for cluster, ``extend`` for an indivisible Y channel.
    """
    kind = kind.lower()
    if kind not in PRESET_KINDS:
        raise InvalidInputError(f"unknown preset {kind!r}; choose from {PRESET_KINDS}")
    if "M" not in params or "N" not in params:
        raise InvalidInputError("presets need at least M and N")
    N = int(params["N"])
    K = params.get("K")
    M = _antenna_vector(K, params["M"])
    K = len(M)
    D = np.zeros((K, K), dtype=np.int64)

    if kind == "y":
        if len(set(M)) != 1:
            raise InvalidInputError("the Y channel preset needs equal antennas")
        extend = params.get("extend")
        if extend not in (None, 0, 1):
            return extend_scenario(M, N, y_channel_switch(K, M[0]), int(extend))
        d = _equal_share(M[0], K - 1, "Y channel")
        D[:] = d
        np.fill_diagonal(D, 0)

    elif kind == "star":
        hub = int(np.argmax(M))
        for j in range(K):
            if j != hub:
                D[hub, j] = D[j, hub] = M[j]

    elif kind == "xrelay":
        if K % 2 or len(set(M)) != 1:
            raise InvalidInputError("two-way X relay preset needs even K and equal M")
        d = _equal_share(M[0], K // 2, "two-way X relay")
        half = K // 2
        D[:half, half:] = d
        D[half:, :half] = d

    elif kind == "multipair":
        pairs = params.get("pairs") or [(k + 1, k + 2) for k in range(0, K - 1, 2)]
        seen = set()
        for s, t in pairs:
            s, t = int(s) - 1, int(t) - 1
            if s == t or not (0 <= s < K and 0 <= t < K) or {s, t} & seen:
                raise InvalidInputError(f"pairs {pairs} are not a matching on 1..{K}")
            seen |= {s, t}
            D[s, t] = D[t, s] = min(M[s], M[t])

    elif kind == "cluster":
        L = int(params.get("L", 1))
        if L < 1 or K % L or K // L < 2 or len(set(M)) != 1:
            raise InvalidInputError(
                "cluster preset needs equal M and L dividing K into clusters of >= 2"
            )
        size = K // L
        d = _equal_share(M[0], size - 1, "L-cluster")
        for c in range(L):
            blk = slice(c * size, (c + 1) * size)
            D[blk, blk] = d
        np.fill_diagonal(D, 0)

    return Scenario.create(M, N, D)


# ---------------------------------------------------------------------------
# channels
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ChannelSet:
    """Uplink ``H[i]`` (N x M_eff_i) and downlink ``G[i]`` (M_eff_i x N)."""

    H: tuple
    G: tuple
    seed: Optional[int] = None

    @classmethod
    def from_matrices(cls, scenario, H, G, seed=None, tol: Tolerance = DEFAULT_TOL):
        """Validate injected channel matrices against `scenario`."""
        eff = effective_antennas(scenario)
        if len(H) != eff.K or len(G) != eff.K:
            raise InvalidInputError(f"need {eff.K} uplink and downlink matrices")
        Hs, Gs = [], []
        for i, (h, g, m) in enumerate(zip(H, G, eff.M_eff)):
            h = matcore.as_cmatrix(h)
            g = matcore.as_cmatrix(g)
            if h.shape != (eff.N, m) or g.shape != (m, eff.N):
                raise InvalidInputError(
                    f"node {i + 1}: expected H {(eff.N, m)} and G {(m, eff.N)}, "
                    f"got {h.shape} and {g.shape}"
                )
            for name, mat in (("H", h), ("G", g)):
                if matcore.rank(mat, tol) < min(mat.shape):
                    raise DegenerateChannelError(
                        f"{name}_{i + 1} is rank deficient"
                    )
            h.setflags(write=False)
            g.setflags(write=False)
            Hs.append(h)
            Gs.append(g)
        return cls(H=tuple(Hs), G=tuple(Gs), seed=seed)

    @property
    def K(self):
        return len(self.H)


def sample_channels(scenario, seed: int, tol: Tolerance = DEFAULT_TOL) -> ChannelSet:
    """Draw unit-variance Rayleigh channels for every node.

    Node i's uplink uses stream ``(seed, 0, i)`` and its downlink
    ``(seed, 1, i)``.  Node 1 draws all M_1 antennas and keeps the first
    M_eff_1, so deactivation never changes the other nodes' channels.
    """
    eff = effective_antennas(scenario)
    H, G = [], []
    for i, (m, m_eff) in enumerate(zip(eff.M, eff.M_eff)):
        H.append(matcore.sample_gaussian(eff.N, m, (seed, 0, i))[:, :m_eff])
        G.append(matcore.sample_gaussian(m, eff.N, (seed, 1, i))[:m_eff, :])
    return ChannelSet.from_matrices(eff, H, G, seed=seed, tol=tol)


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def _parse_entry(v):
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, float):
        return Fraction(v).limit_denominator(10**6)
    return Fraction(int(v))


def instance_from_json(obj: dict):
    """Parse scenario JSON into user-ordered ``(M, N, D)``.

    Accepted forms::

        {"K": 3, "M": [2, 2, 2], "N": 3, "D": [[0, 1, 1], ...], "seed": 1}
        {"preset": "y", "params": {"K": 3, "M": 2}, "N": 3}

    ``D`` entries may be integers or fraction strings such as ``"3/2"``
    and come back as :class:`fractions.Fraction`; ``D`` is None when
    absent.  An indivisible Y-channel preset yields its fractional matrix.
    """
    if not isinstance(obj, dict):
        raise InvalidInputError("scenario JSON must be an object")
    if "preset" in obj:
        params = dict(obj.get("params") or {})
        for key in ("K", "M", "N"):
            if key in obj and key not in params:
                params[key] = obj[key]
        kind = str(obj["preset"]).lower()
        try:
            scn = preset(kind, **params)
        except NotRepresentableError:
            if kind != "y":
                raise
            M = _antenna_vector(params.get("K"), params["M"])
            return M, int(params["N"]), y_channel_switch(len(M), M[0])
        D = [[Fraction(int(v)) for v in row] for row in scn.user_D()]
        return scn.user_order(list(scn.M)), scn.N, D

    try:
        M = [int(m) for m in obj["M"]]
        N = int(obj["N"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"scenario JSON needs integer M list and N: {exc}")
    if "K" in obj and int(obj["K"]) != len(M):
        raise InvalidInputError(f"K={obj['K']} but M has {len(M)} entries")
    D = obj.get("D")
    if D is None:
        return M, N, None
    try:
        Dq = [[_parse_entry(v) for v in row] for row in D]
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise InvalidInputError(f"bad data switch matrix entry: {exc}")
    return M, N, Dq


def scenario_from_json(obj: dict, extend: Optional[int] = None) -> Scenario:
    """Build a scenario from the CLI JSON schema (see :func:`instance_from_json`).

    Fractional stream counts need an `extend` factor that makes them
    integral; the extended scenario is returned in that case.
    """
    M, N, D = instance_from_json(obj)
    if extend and extend > 1:
        if D is None:
            return Scenario.create([extend * m for m in M], extend * N)
        return extend_scenario(M, N, D, extend)
    return Scenario.create(M, N, None if D is None else np.array(D, dtype=object))


def scenario_to_json(scenario: Scenario, seed=None) -> dict:
    """Inverse of :func:`scenario_from_json`, in user label order."""
    out = {"K": scenario.K, "M": scenario.user_order(list(scenario.M)), "N": scenario.N}
    if scenario.D is not None:
        out["D"] = scenario.user_D().tolist()
    if seed is not None:
        out["seed"] = int(seed)
    return out
