"""
Generalized signal alignment for multi-user MIMO two-way relaying.

The relay projects its received signal with ``A`` so that every active pair
(s, t) occupies its own rows free of the other sources (external
interference); each source then pre-inverts its effective channel so that
within those rows only the pair's matching streams survive (internal
interference).  Together ``A @ H @ V == P`` where ``P`` adds the two
directions of every pair.  In the broadcast phase ``U`` nulls each pair's
network-coded streams at every user outside the pair.

Indexing conventions (all 0-based, internal node order):

* relay rows: pairs in plan order, ``d_st`` consecutive rows each;
* symbol vector ``s``: node-major, then destination ascending, then stream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import block_diag

from . import matcore
from .errors import (
    DegenerateChannelError,
    InfeasibleAntennasError,
    InvalidInputError,
    SingularMatrixError,
)
from .matcore import DEFAULT_TOL, Tolerance
from .scenario import (
    ChannelSet,
    Scenario,
    as_switch_matrix,
    effective_antennas,
    extend_scenario,
    sample_channels,
    validate_switch_matrix,
)

__all__ = [
    "PairPlan",
    "GsaDesign",
    "SymbolExtension",
    "build_pair_plan",
    "build_projection",
    "build_source_precoders",
    "build_broadcast",
    "build_rx_decoders",
    "design",
    "verify_design",
    "extend_symbols",
    "design_to_json",
]


@dataclass(frozen=True, eq=False)
class PairPlan:
    """Stream bookkeeping derived from a symmetric switch matrix.

    Attributes
    ----------
    pairs : tuple of (s, t, d)
        Active pairs, ``s < t``, lexicographic unless an order was given.
    stream_offsets : tuple of int
        First relay row of each pair.
    total_relay_streams : int
    D : numpy.ndarray
    node_rows : tuple of numpy.ndarray
        ``node_rows[i][r]`` is the relay row serving column r of ``s_i``.
    node_offsets : tuple of int
        First column of ``s_i`` inside ``s``.
    partner_cols : tuple of numpy.ndarray
        ``partner_cols[i][r]`` is the column of ``s`` holding the stream
        node i receives on its r-th slot (the reverse direction).
    labels : tuple of int
        User-facing labels, used only in error messages.
    """

    pairs: tuple
    stream_offsets: tuple
    total_relay_streams: int
    D: np.ndarray
    node_rows: tuple
    node_offsets: tuple
    partner_cols: tuple
    labels: tuple

    @property
    def K(self):
        return self.D.shape[0]

    @property
    def node_streams(self):
        return tuple(int(v) for v in self.D.sum(axis=1))

    @property
    def total_symbols(self):
        return int(self.D.sum())

    def pair_rows(self, p):
        start = self.stream_offsets[p]
        return np.arange(start, start + self.pairs[p][2])

    def label_pair(self, s, t):
        a, b = (self.labels[s], self.labels[t]) if self.labels else (s + 1, t + 1)
        return (min(a, b), max(a, b))

    def symbol_col(self, i, j, l):
        """Column of ``s_{i,j}^l`` in the stacked symbol vector."""
        return self.node_offsets[i] + int(self.D[i, :j].sum()) + l


def build_pair_plan(D, order: Optional[Sequence] = None, labels: Sequence = ()) -> PairPlan:
    """Lay out active pairs, relay rows and the symbol vector.

    Parameters
    ----------
    D : array_like
        Symmetric, zero-diagonal, nonnegative integer switch matrix.
    order : sequence of (s, t), optional
        Explicit 0-based pair order; defaults to lexicographic.
    labels : sequence of int, optional
        User labels for diagnostics.
    """
    D = as_switch_matrix(D)
    K = D.shape[0]
    if np.any(D < 0) or np.any(np.diag(D)) or not np.array_equal(D, D.T):
        raise InvalidInputError("switch matrix must be symmetric, nonnegative, zero-diagonal")
    active = [(s, t) for s in range(K) for t in range(s + 1, K) if D[s, t] > 0]
    if order is not None:
        order = [tuple(sorted(map(int, p))) for p in order]
        if sorted(order) != active:
            raise InvalidInputError(f"pair order {order} does not cover active pairs {active}")
        active = order
    pairs = tuple((s, t, int(D[s, t])) for s, t in active)
    offsets = tuple(int(v) for v in np.concatenate([[0], np.cumsum([p[2] for p in pairs])])[:-1])
    total = sum(p[2] for p in pairs)

    row_of = {}
    for p, (s, t, d) in enumerate(pairs):
        row_of[(s, t)] = row_of[(t, s)] = offsets[p]

    node_offsets = tuple(int(v) for v in np.concatenate([[0], np.cumsum(D.sum(axis=1))])[:-1])
    node_rows, partner_cols = [], []
    for i in range(K):
        rows, cols = [], []
        for j in range(K):
            for l in range(D[i, j]):
                rows.append(row_of[(i, j)] + l)
                cols.append(node_offsets[j] + int(D[j, :i].sum()) + l)
        node_rows.append(np.array(rows, dtype=np.intp))
        partner_cols.append(np.array(cols, dtype=np.intp))

    return PairPlan(
        pairs=pairs,
        stream_offsets=offsets,
        total_relay_streams=total,
        D=D,
        node_rows=tuple(node_rows),
        node_offsets=node_offsets,
        partner_cols=tuple(partner_cols),
        labels=tuple(labels),
    )


def pairing_matrix(plan: PairPlan) -> np.ndarray:
    """0/1 matrix mapping the symbol vector to the network-coded vector."""
    P = np.zeros((plan.total_relay_streams, plan.total_symbols))
    for i in range(plan.K):
        for r, row in enumerate(plan.node_rows[i]):
            P[row, plan.node_offsets[i] + r] = 1.0
    return P


def _pair_blocks(mats, plan, tol, kind, uplink):
    """Null-space block of every pair against the stacked excluded channels."""
    N = mats[0].shape[0] if uplink else mats[0].shape[1]
    blocks = []
    for s, t, d in plan.pairs:
        excluded = [m for k, m in enumerate(mats) if k not in (s, t)]
        if uplink:
            # row vectors a with a H_m = 0, i.e. H_m^T a^T = 0
            stack = np.vstack([m.T for m in excluded]) if excluded else np.zeros((0, N))
        else:
            stack = np.vstack(excluded) if excluded else np.zeros((0, N))
        basis = matcore.null_space(stack, tol)
        if basis.shape[1] < d:
            need = stack.shape[0] + d
            raise InfeasibleAntennasError(
                f"{kind} block for pair {plan.label_pair(s, t)} needs {d} dimensions "
                f"but the null space has {basis.shape[1]} (relay needs N >= {need}, has {N})",
                pair=plan.label_pair(s, t),
                required=need,
                available=N,
            )
        blocks.append(basis[:, :d])
    return blocks


def build_projection(channels: ChannelSet, plan: PairPlan, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Relay projection ``A`` (total_relay_streams x N).

    Each pair's rows span part of the left null space of the uplink
    channels of every other source.

    Raises
    ------
    InfeasibleAntennasError
        A pair's null space is too small.
    DegenerateChannelError
        The rows of ``A`` are not jointly independent.
    """
    N = channels.H[0].shape[0]
    if plan.total_relay_streams == 0:
        return np.zeros((0, N), dtype=np.complex128)
    blocks = _pair_blocks(channels.H, plan, tol, "projection", uplink=True)
    A = np.vstack([b.T for b in blocks])
    if matcore.rank(A, tol) < A.shape[0]:
        raise DegenerateChannelError(
            f"projection rows are dependent (rank {matcore.rank(A, tol)} < {A.shape[0]})"
        )
    return A


def _check_row_sums(channels, plan):
    for i, (h, d) in enumerate(zip(channels.H, plan.node_streams)):
        if h.shape[1] != d:
            raise InvalidInputError(
                f"node {plan.labels[i] if plan.labels else i + 1} sends {d} streams "
                f"but has {h.shape[1]} active antennas"
            )


def build_source_precoders(channels: ChannelSet, plan: PairPlan, A, tol: Tolerance = DEFAULT_TOL):
    """Per-node square precoders ``V_i = C_i^{-1}``.

    ``C_i`` collects the rows of ``A @ H_i`` serving node i's streams, in
    the order of node i's symbol columns.
    """
    _check_row_sums(channels, plan)
    V = []
    for i, h in enumerate(channels.H):
        C_i = (A @ h)[plan.node_rows[i], :]
        try:
            V.append(matcore.invert(C_i, tol))
        except SingularMatrixError as exc:
            raise DegenerateChannelError(f"C_{i + 1} is not invertible: {exc}") from exc
    return tuple(V)


def build_broadcast(channels: ChannelSet, plan: PairPlan, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Relay broadcast precoder ``U`` (N x total_relay_streams) by interference nulling."""
    N = channels.G[0].shape[1]
    if plan.total_relay_streams == 0:
        return np.zeros((N, 0), dtype=np.complex128)
    blocks = _pair_blocks(channels.G, plan, tol, "broadcast", uplink=False)
    U = np.hstack(blocks)
    if matcore.rank(U, tol) < U.shape[1]:
        raise DegenerateChannelError(
            f"broadcast columns are dependent (rank {matcore.rank(U, tol)} < {U.shape[1]})"
        )
    return U


def build_rx_decoders(channels: ChannelSet, plan: PairPlan, U, tol: Tolerance = DEFAULT_TOL):
    """Zero-forcing decoders ``E_i^{-1}`` with ``E_i = G_i U[:, rows of node i]``."""
    _check_row_sums(channels, plan)
    out = []
    for i, g in enumerate(channels.G):
        E_i = g @ U[:, plan.node_rows[i]]
        try:
            out.append(matcore.invert(E_i, tol))
        except SingularMatrixError as exc:
            raise DegenerateChannelError(f"E_{i + 1} is not invertible: {exc}") from exc
    return tuple(out)


@dataclass(frozen=True, eq=False)
class GsaDesign:
    """Complete transceiver design for one channel realization.

    ``slots`` is the symbol-extension factor the design was built for
    (1 without extension); rates and DoF are reported per original slot.
    """

    plan: PairPlan
    A: np.ndarray
    V: tuple
    U: np.ndarray
    P: np.ndarray
    rx_decoders: tuple
    slots: int = 1

    @property
    def V_full(self) -> np.ndarray:
        return block_diag(*self.V) if self.V else np.zeros((0, 0))

    @property
    def streams_delivered(self) -> int:
        return 2 * self.plan.total_relay_streams

    def relay_forward(self, y_r):
        """Projection-and-forward: estimate ``s_plus`` then precode with U."""
        s_hat = self.A @ y_r
        return self.U @ s_hat

    def decode(self, i, y_i, s_i):
        """Node i's estimate of the streams addressed to it.

        Applies the zero-forcing decoder then removes the node's own
        symbols `s_i` (side information).
        """
        return self.rx_decoders[i] @ y_i - s_i


def design(scenario, channels: ChannelSet, tol: Tolerance = DEFAULT_TOL,
           order=None, slots: int = 1) -> GsaDesign:
    """Run the full construction on `channels` for ``scenario.D``."""
    eff = effective_antennas(scenario)
    if eff.D is None:
        raise InvalidInputError("scenario has no data switch matrix")
    problems = validate_switch_matrix(eff.D, eff, enforce_row_sums=True)
    if problems:
        raise InvalidInputError("invalid data switch matrix: " + "; ".join(problems))
    plan = build_pair_plan(eff.D, order=order, labels=eff.base.labels)
    A = build_projection(channels, plan, tol)
    V = build_source_precoders(channels, plan, A, tol)
    U = build_broadcast(channels, plan, tol)
    dec = build_rx_decoders(channels, plan, U, tol)
    return GsaDesign(plan=plan, A=A, V=V, U=U, P=pairing_matrix(plan), rx_decoders=dec, slots=slots)


def verify_design(dsg: GsaDesign, channels: ChannelSet) -> dict:
    """Residuals of every defining identity (max-abs entry).

    Keys: ``alignment`` (A H V - P), ``external`` (A_p H_m for m outside
    pair p), ``nulling`` (G_m U_p likewise), ``rank_A`` and ``rank_U``.
    """
    plan = dsg.plan
    H = np.hstack(channels.H)
    alignment = matcore.max_abs(dsg.A @ H @ dsg.V_full - dsg.P)
    external = nulling = 0.0
    for p, (s, t, d) in enumerate(plan.pairs):
        rows = plan.pair_rows(p)
        for m in range(plan.K):
            if m in (s, t):
                continue
            external = max(external, matcore.max_abs(dsg.A[rows] @ channels.H[m]))
            nulling = max(nulling, matcore.max_abs(channels.G[m] @ dsg.U[:, rows]))
    return {
        "alignment": alignment,
        "external": external,
        "nulling": nulling,
        "rank_A": matcore.rank(dsg.A) if dsg.A.size else 0,
        "rank_U": matcore.rank(dsg.U) if dsg.U.size else 0,
    }


# ---------------------------------------------------------------------------
# symbol extension
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SymbolExtension:
    """A `factor`-slot extension of `base` with a constant channel.

    ``scenario`` is the equivalent instance with ``factor`` times the
    antennas and streams; :meth:`lift` turns channels of `base` into the
    block-diagonal equivalent channels of ``scenario``.
    """

    base: Scenario
    factor: int
    scenario: Scenario

    def lift(self, channels: ChannelSet) -> ChannelSet:
        f = self.factor
        eye = np.eye(f)
        H = [np.kron(eye, h) for h in channels.H]
        G = [np.kron(eye, g) for g in channels.G]
        return ChannelSet.from_matrices(self.scenario, H, G, seed=channels.seed)

    def sample_channels(self, seed: int) -> ChannelSet:
        return self.lift(sample_channels(self.base, seed))

    def design(self, channels: ChannelSet, tol: Tolerance = DEFAULT_TOL) -> GsaDesign:
        """Build on base `channels` (lifted internally)."""
        return design(self.scenario, self.lift(channels), tol, slots=self.factor)


def extend_symbols(scenario: Scenario, factor: int, D=None) -> SymbolExtension:
    """Stack `factor` channel uses into one equivalent instance.

    Parameters
    ----------
    scenario : Scenario
        Base antennas (its ``D`` may be None).
    factor : int
        Number of slots, >= 1; the Y channel needs K - 1.
    D : array_like, optional
        Per-slot switch matrix in user label order, possibly fractional
        (``fractions.Fraction`` or ``"p/q"`` strings); defaults to
        ``scenario.D``.
    """
    factor = int(factor)
    if factor < 1:
        raise InvalidInputError("extension factor must be >= 1")
    if D is None:
        if scenario.D is None:
            raise InvalidInputError("no data switch matrix to extend")
        D = scenario.user_D()
    ext = extend_scenario(scenario.user_order(list(scenario.M)), scenario.N, D, factor)
    base = Scenario(scenario.M, scenario.N, None, scenario.labels)
    return SymbolExtension(base=base, factor=factor, scenario=ext)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _matrix_json(m):
    m = np.asarray(m, dtype=np.complex128)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in m.ravel()],
    }


def design_to_json(dsg: GsaDesign) -> dict:
    """JSON bundle: every matrix as dims plus row-major ``[re, im]`` pairs.

    Pairs are reported with 1-based user labels.
    """
    plan = dsg.plan
    return {
        "pairs": [
            {"pair": list(plan.label_pair(s, t)), "streams": d, "offset": off}
            for (s, t, d), off in zip(plan.pairs, plan.stream_offsets)
        ],
        "labels": list(plan.labels),
        "slots": dsg.slots,
        "total_relay_streams": plan.total_relay_streams,
        "A": _matrix_json(dsg.A),
        "U": _matrix_json(dsg.U),
        "P": _matrix_json(dsg.P),
        "V": [_matrix_json(v) for v in dsg.V],
        "rx_decoders": [_matrix_json(e) for e in dsg.rx_decoders],
    }


def design_from_json(obj) -> dict:
    """Decode the matrices of a :func:`design_to_json` bundle."""
    def mat(o):
        data = np.array(o["data"], dtype=float).reshape(-1, 2) if o["data"] else np.zeros((0, 2))
        return (data[:, 0] + 1j * data[:, 1]).reshape(o["rows"], o["cols"])

    if isinstance(obj, str):
        obj = json.loads(obj)
    return {
        "A": mat(obj["A"]),
        "U": mat(obj["U"]),
        "P": mat(obj["P"]),
        "V": [mat(v) for v in obj["V"]],
        "rx_decoders": [mat(e) for e in obj["rx_decoders"]],
    }
