import json

import numpy as np
import pytest

from gsarelay import dof, gsa, matcore, sim
from gsarelay.errors import InfeasibleAntennasError, InvalidInputError
from gsarelay.matcore import DEFAULT_TOL
from gsarelay.scenario import ChannelSet, Scenario, preset, sample_channels, y_channel_switch

TOL = DEFAULT_TOL.verify_tol


def test_pair_plan_y3():
    plan = gsa.build_pair_plan(preset("y", K=3, M=2, N=5).D)
    assert plan.pairs == ((0, 1, 1), (0, 2, 1), (1, 2, 1))
    assert plan.stream_offsets == (0, 1, 2)
    assert plan.total_relay_streams == 3


def test_pair_plan_star():
    plan = gsa.build_pair_plan(preset("star", M=[3, 2, 1], N=3).D)
    assert plan.pairs == ((0, 1, 2), (0, 2, 1))
    assert plan.total_relay_streams == 3


def test_pair_plan_empty_and_asymmetric():
    plan = gsa.build_pair_plan(np.zeros((3, 3), int))
    assert plan.pairs == () and plan.total_relay_streams == 0
    with pytest.raises(InvalidInputError):
        gsa.build_pair_plan([[0, 2], [1, 0]])


def test_symbol_layout():
    D = np.array([[0, 2, 1], [2, 0, 0], [1, 0, 0]])
    plan = gsa.build_pair_plan(D)
    assert plan.node_offsets == (0, 3, 5)
    assert plan.symbol_col(0, 2, 0) == 2
    # node 1 receives s_{2,1}^0, s_{2,1}^1 then s_{3,1}^0
    assert plan.partner_cols[0].tolist() == [3, 4, 5]
    assert plan.partner_cols[2].tolist() == [2]
    P = gsa.pairing_matrix(plan)
    assert np.all(P.sum(axis=1) == 2) and np.all(P.sum(axis=0) == 1)


def test_projection_nulls_excluded_sources_over_seeds():
    scn = preset("y", K=3, M=2, N=5)
    plan = gsa.build_pair_plan(scn.D)
    for seed in range(100):
        ch = sample_channels(scn, seed)
        A = gsa.build_projection(ch, plan)
        assert A.shape == (3, 5) and matcore.rank(A) == 3
        for p, (s, t, d) in enumerate(plan.pairs):
            m = ({0, 1, 2} - {s, t}).pop()
            assert matcore.max_abs(A[plan.pair_rows(p)] @ ch.H[m]) <= TOL


def test_projection_infeasible():
    scn = preset("y", K=4, M=3, N=6)
    ch = sample_channels(scn, 0)
    with pytest.raises(InfeasibleAntennasError) as info:
        gsa.build_projection(ch, gsa.build_pair_plan(scn.D))
    assert info.value.pair == (1, 2) and info.value.required == 7


def test_two_users_need_no_nulling():
    scn = Scenario.create([2, 2], 5, [[0, 2], [2, 0]])
    ch = sample_channels(scn, 3)
    A = gsa.build_projection(ch, gsa.build_pair_plan(scn.D))
    np.testing.assert_array_equal(A, np.eye(5)[:2])


def test_single_pair_network_coding():
    scn = Scenario.create([1, 1], 3, [[0, 1], [1, 0]])
    ch = sample_channels(scn, 2)
    dsg = gsa.design(scn, ch)
    np.testing.assert_array_equal(dsg.P, [[1.0, 1.0]])
    s = np.array([[0.3 - 1j], [2.0 + 0.5j]])
    # node 1 gets (s12 + s21) - s12 = s21
    assert sim.run_noiseless(dsg, ch, symbols=s) <= 10 * TOL


def test_alignment_identity_and_nulling(y3_design):
    scn, ch, dsg = y3_design
    checks = gsa.verify_design(dsg, ch)
    assert checks["alignment"] <= TOL
    assert checks["external"] <= TOL and checks["nulling"] <= TOL
    assert checks["rank_A"] == 3 and checks["rank_U"] == 3


def test_pair_order_permutes_rows_consistently():
    scn = preset("y", K=3, M=2, N=5)
    ch = sample_channels(scn, 8)
    ref = gsa.design(scn, ch)
    order = [(1, 2), (0, 1), (0, 2)]
    alt = gsa.design(scn, ch, order=order)
    perm = [2, 0, 1]  # new row k comes from old row perm[k]
    np.testing.assert_allclose(alt.A, ref.A[perm])
    np.testing.assert_array_equal(alt.P, ref.P[perm])
    assert gsa.verify_design(alt, ch)["alignment"] <= TOL


def test_broadcast_over_seeds():
    scn = preset("y", K=3, M=2, N=5)
    plan = gsa.build_pair_plan(scn.D)
    for seed in range(100):
        ch = sample_channels(scn, seed)
        U = gsa.build_broadcast(ch, plan)
        for p, (s, t, d) in enumerate(plan.pairs):
            m = ({0, 1, 2} - {s, t}).pop()
            assert matcore.max_abs(ch.G[m] @ U[:, plan.pair_rows(p)]) <= TOL


def test_broadcast_y4_rank():
    scn = preset("y", K=4, M=3, N=7)
    U = gsa.build_broadcast(sample_channels(scn, 0), gsa.build_pair_plan(scn.D))
    assert U.shape == (7, 6) and matcore.rank(U) == 6


def test_broadcast_empty_plan():
    scn = preset("y", K=3, M=2, N=5)
    U = gsa.build_broadcast(sample_channels(scn, 0), gsa.build_pair_plan(np.zeros((3, 3), int)))
    assert U.shape == (5, 0)


def test_decoders_single_pair_structure():
    scn = Scenario.create([2, 2], 4, [[0, 2], [2, 0]])
    ch = sample_channels(scn, 0)
    dsg = gsa.design(scn, ch)
    for g, dec in zip(ch.G, dsg.rx_decoders):
        assert dec.shape == (2, 2)
        assert matcore.max_abs(dec @ (g @ dsg.U) - np.eye(2)) <= TOL


def test_zero_symbols_zero_error(y3_design):
    scn, ch, dsg = y3_design
    assert sim.run_noiseless(dsg, ch, symbols=np.zeros((6, 1))) == 0.0


def test_round_trip_recovery(y3_design):
    scn, ch, dsg = y3_design
    assert sim.run_noiseless(dsg, ch, seed=3, n_vectors=32) <= 10 * TOL


@pytest.mark.parametrize(
    "kind, params",
    [
        ("y", dict(K=3, M=2, N=3)),
        ("y", dict(K=4, M=3, N=7)),
        ("star", dict(M=[5, 2, 1], N=3)),
        ("xrelay", dict(K=4, M=2, N=5)),
        ("cluster", dict(K=6, M=2, N=7, L=2)),
    ],
)
def test_boundary_tightness(kind, params):
    scn = preset(kind, **params)
    n_min = dof.analyze(scn).min_N_required
    at, below = scn.with_N(n_min), scn.with_N(n_min - 1)
    ok = 0
    for seed in range(100):
        ch = sample_channels(at, seed)
        dsg = gsa.design(at, ch)
        ok += gsa.verify_design(dsg, ch)["alignment"] <= TOL
        with pytest.raises(InfeasibleAntennasError):
            gsa.design(below, sample_channels(below, seed))
    assert ok >= 99


def test_general_asymmetric_antennas():
    D = [[0, 1, 2], [1, 0, 1], [2, 1, 0]]
    scn = Scenario.create([3, 2, 3], 4, D)
    ch = sample_channels(scn, 5)
    dsg = gsa.design(scn, ch)
    assert gsa.verify_design(dsg, ch)["alignment"] <= TOL
    assert sim.run_noiseless(dsg, ch) <= 10 * TOL


def test_extension_shapes():
    ext = gsa.extend_symbols(Scenario.create([3, 3, 3], 5), 2, y_channel_switch(3, 3))
    assert ext.scenario.M == (6, 6, 6) and ext.scenario.N == 10
    assert ext.scenario.D[0, 1] == 3
    # antenna condition on the extended instance: 2N - (K-2) 2M >= d
    assert 2 * 5 - 1 * 6 >= 3


def test_extension_identity_factor():
    scn = preset("y", K=3, M=2, N=5)
    ext = gsa.extend_symbols(scn, 1)
    base = sample_channels(scn, 0)
    lifted = ext.lift(base)
    for a, b in zip(base.H + base.G, lifted.H + lifted.G):
        np.testing.assert_array_equal(a, b)


def test_extension_end_to_end():
    base = Scenario.create([3, 3, 3], 5)
    ext = gsa.extend_symbols(base, 2, y_channel_switch(3, 3))
    ok = 0
    for seed in range(100):
        ch = ext.sample_channels(seed)
        dsg = gsa.design(ext.scenario, ch, slots=2)
        assert dsg.streams_delivered == 18
        ok += sim.run_noiseless(dsg, ch, seed) <= 10 * TOL
    assert ok >= 99


def test_extension_lift_is_block_diagonal():
    base = Scenario.create([2, 2, 2], 3)
    ext = gsa.extend_symbols(base, 3, y_channel_switch(3, 2))
    ch = sample_channels(base, 1)
    lifted = ext.lift(ch)
    H0 = lifted.H[0]
    assert H0.shape == (9, 6)
    np.testing.assert_array_equal(H0[3:6, 2:4], ch.H[0])
    assert not H0[0:3, 2:4].any()


def test_design_json_round_trip(y3_design):
    scn, ch, dsg = y3_design
    bundle = json.loads(json.dumps(gsa.design_to_json(dsg)))
    assert bundle["A"]["rows"] == 3 and bundle["A"]["cols"] == 5
    assert len(bundle["A"]["data"]) == 15 and len(bundle["A"]["data"][0]) == 2
    assert bundle["pairs"][0] == {"pair": [1, 2], "streams": 1, "offset": 0}
    mats = gsa.design_from_json(bundle)
    np.testing.assert_array_equal(mats["A"], dsg.A)
    np.testing.assert_array_equal(mats["V"][1], dsg.V[1])


def test_design_rejects_bad_row_sums():
    scn = Scenario.create([2, 2, 2], 5, [[0, 1, 0], [1, 0, 0], [0, 0, 0]])
    with pytest.raises(InvalidInputError):
        gsa.design(scn, sample_channels(scn, 0))
