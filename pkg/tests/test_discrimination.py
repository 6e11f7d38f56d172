import numpy as np
import pytest

from combtester.channels import (
    Channel,
    comb_from_sequence,
    identity_channel,
    unitary_channel,
)
from combtester.discrimination import (
    causal_discriminable,
    delta_matrix,
    kraus_orthogonality,
    min_entanglement_rank,
    parallel_discriminable,
    product_residual,
    synthesize_tester,
)
from combtester.matcore import LabeledOperator
from combtester.optim import XiChainSet
from combtester.sampling import haar_unitary, random_density, random_kraus
from combtester.separation import build_example
from combtester.testers import validate_tester

X = np.array([[0, 1], [1, 0]], dtype=complex)


def test_parallel_identical_channels_infeasible():
    c = comb_from_sequence([identity_channel(2)]).choi
    rep = parallel_discriminable(c, c, restarts=4, seed=0)
    assert rep.status == "infeasible"
    assert rep.residual > 1.0


def test_parallel_identity_vs_exchange_feasible():
    ci = comb_from_sequence([identity_channel(2)]).choi
    cx = comb_from_sequence([unitary_channel(X)]).choi
    rep = parallel_discriminable(ci, cx, restarts=4, seed=0)
    assert rep.feasible
    assert rep.residual <= 1e-10
    ok, viol = kraus_orthogonality(identity_channel(2), unitary_channel(X),
                                   rep.witness.matrix)
    assert ok, viol


def test_parallel_counterexample_infeasible():
    inst = build_example(2)
    rep = parallel_discriminable(inst.c0.choi, inst.c1.choi, restarts=4, seed=0)
    assert rep.status == "infeasible"
    # the exact minimum is purity/d^6, attained at the maximally mixed input
    assert abs(rep.residual - 1.0 / 2**8) < 1e-9


def test_objective_history_monotone():
    inst = build_example(2)
    rep = parallel_discriminable(inst.c0.choi, inst.c1.choi, restarts=2, seed=1)
    h = np.asarray(rep.objective_history)
    assert np.all(np.diff(h) <= 1e-15)


def test_kraus_orthogonality_cases():
    idc = identity_channel(2)
    xc = unitary_channel(X)
    ok, viol = kraus_orthogonality(idc, xc, np.eye(2) / 2)
    assert ok and viol < 1e-15
    ok, viol = kraus_orthogonality(idc, idc, np.eye(2) / 2)
    assert not ok and abs(viol - 1.0) < 1e-12


def test_phase_gate_never_orthogonal_below_pi():
    idc = identity_channel(2)
    for theta in (0.3, 1.2, np.pi - 0.2):
        u = np.diag([1.0, np.exp(1j * theta)])
        uc = unitary_channel(u)
        floor = np.cos(theta / 2)  # hull distance of {1, e^{i theta}}
        rng = np.random.default_rng(0)
        best = min(
            kraus_orthogonality(idc, uc, random_density(2, rng))[1] for _ in range(200)
        )
        assert best > floor - 1e-9
        rep = parallel_discriminable(
            comb_from_sequence([idc]).choi, comb_from_sequence([uc]).choi,
            restarts=4, seed=0,
        )
        assert rep.status in ("infeasible", "undetermined")


def test_orthogonality_iff_zero_objective():
    rng = np.random.default_rng(1)
    idc = identity_channel(2)
    ci = comb_from_sequence([idc]).choi
    for _ in range(20):
        u = haar_unitary(2, rng)
        uc = unitary_channel(u)
        cu = comb_from_sequence([uc]).choi
        rho = random_density(2, rng)
        witness = LabeledOperator(rho, (0,), (2,))
        f = product_residual(ci, cu, [1], witness)
        ok, viol = kraus_orthogonality(idc, uc, rho.T)
        # f = d^2 |Tr[U rho^T]|^2 for unitary channels
        assert abs(f - 4 * viol**2) < 1e-10
        assert ok == (f <= 1e-16 * max(1.0, f + 1.0))


def test_min_entanglement_rank_examples():
    idc = identity_channel(2)
    assert min_entanglement_rank(idc, unitary_channel(X)) == 1
    assert min_entanglement_rank(idc, identity_channel(2)) is None
    flip = unitary_channel(np.diag([1.0, np.exp(1j * np.pi)]))
    assert min_entanglement_rank(idc, flip) == 1


def test_min_entanglement_rank_none_below_threshold():
    # spread below pi: no input state of any rank gives orthogonal outputs
    idc = identity_channel(2)
    u = np.diag([1.0, 1j])
    assert min_entanglement_rank(idc, unitary_channel(u)) is None


def test_causal_identical_infeasible():
    mc = comb_from_sequence([identity_channel(2), identity_channel(2)])
    rep = causal_discriminable(mc, mc, restarts=3, seed=0, max_iter=150)
    assert rep.status == "infeasible"


def test_causal_counterexample_feasible_and_synthesis():
    inst = build_example(2)
    rep = causal_discriminable(inst.c0, inst.c1, restarts=4, seed=0, max_iter=1500)
    assert rep.feasible, rep.residual
    t = synthesize_tester(inst.c0, inst.c1, rep.witness)
    dm = delta_matrix(t, [inst.c0, inst.c1])
    assert np.abs(dm - np.eye(2)).max() <= 1e-6
    assert validate_tester(t, 1e-8).valid


def test_causal_consistent_with_parallel_on_memoryless():
    # two-use memoryless combs of perfectly discriminable unitaries
    ci = comb_from_sequence([identity_channel(2), identity_channel(2)])
    cx = comb_from_sequence([unitary_channel(X), unitary_channel(X)])
    prep = parallel_discriminable(ci.choi, cx.choi, restarts=4, seed=0)
    crep = causal_discriminable(ci, cx, restarts=4, seed=0, max_iter=800)
    assert prep.feasible and crep.feasible


def test_parallel_witness_embeds_as_causal_witness():
    ci = comb_from_sequence([identity_channel(2), identity_channel(2)])
    cx = comb_from_sequence([unitary_channel(X), unitary_channel(X)])
    rep = parallel_discriminable(ci.choi, cx.choi, restarts=4, seed=0)
    assert rep.feasible
    xi_set = XiChainSet(ci.choi.dims[:-1])
    embedded = xi_set.embed_state(rep.witness)
    assert xi_set.membership_residual(embedded) < 1e-9
    xi = LabeledOperator(embedded, xi_set.labels, xi_set.dims)
    g = product_residual(ci.choi, cx.choi, [3], xi)
    f = product_residual(ci.choi, cx.choi, [1, 3], rep.witness)
    assert abs(g - f) < 1e-10
    t = synthesize_tester(ci, cx, xi)
    assert np.abs(delta_matrix(t, [ci, cx]) - np.eye(2)).max() <= 1e-6


def test_synthesize_refuses_bad_witness():
    mc = comb_from_sequence([identity_channel(2), identity_channel(2)])
    xi_set = XiChainSet(mc.choi.dims[:-1])
    xi = LabeledOperator(xi_set.uniform(), xi_set.labels, xi_set.dims)
    with pytest.raises(ValueError):
        synthesize_tester(mc, mc, xi)


def test_fast_objective_matches_direct_product():
    rng = np.random.default_rng(2)
    for _ in range(5):
        cha = Channel(tuple(random_kraus(2, 2, 2, rng)), 2, 2)
        chb = Channel(tuple(random_kraus(2, 2, 2, rng)), 2, 2)
        a = comb_from_sequence([cha]).choi
        b = comb_from_sequence([chb]).choi
        rho = random_density(2, rng)
        witness = LabeledOperator(rho, (0,), (2,))
        from combtester.discrimination import _ProductObjective

        obj = _ProductObjective(a, b, [1])
        fast, _ = obj.value_and_grad(rho)
        assert abs(fast - product_residual(a, b, [1], witness)) < 1e-10
