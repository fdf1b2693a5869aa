import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hankel_mra import cuntz
from hankel_mra import filter_bank as fb
from hankel_mra import multiresolution as mr


def annular_bank(nu, q):
    sys = fb.BranchSystem(nu, "q_spiral", q)
    rho, nc = fb.annular_bank_constants(nu, q)
    return fb.complete_from_m0(mr.constant_annular_filter(nu, q), sys, rho, nc, label="annular")


def random_bank(nu, seed=0, variant="roots_of_unity"):
    sys = fb.BranchSystem(nu, variant)
    return fb.complete_from_m0(fb.random_qmf_filter(sys, seed=seed), sys)


BANKS = {
    "haar1": lambda: fb.haar_bank(fb.BranchSystem(1)),
    "haar3": lambda: fb.haar_bank(fb.BranchSystem(3)),
    "half_turn": lambda: random_bank(1, 2, "half_turn"),
    "random2": lambda: random_bank(2, 5),
    "annular1": lambda: annular_bank(1, 0.5),
    "annular2": lambda: annular_bank(2, 0.7),
}


@pytest.mark.parametrize("name", sorted(BANKS))
@pytest.mark.parametrize("rho_convention", cuntz.RHO_CONVENTIONS)
def test_relations_hold(name, rho_convention):
    rep = cuntz.representation(BANKS[name](), levels=3, base_points=6, rho_convention=rho_convention)
    report = cuntz.relation_report(rep, n_tests=5, seed=1)
    assert report.passed(1e-13)
    assert report.adjointness_residual <= 1e-13
    assert report.range_orthogonality_residual <= 1e-13


def test_lumped_convention_keeps_relations_but_not_adjointness():
    rep = cuntz.representation(annular_bank(1, 0.5), levels=3, convention="lumped")
    report = cuntz.relation_report(rep, n_tests=3)
    assert report.passed(1e-13)
    assert report.adjointness_residual > 1e-3


def matrix_of_S(rep, k, level):
    n = rep.nodes(level).size
    cols = []
    for i in range(n):
        e = np.zeros(n, dtype=complex)
        e[i] = 1.0
        cols.append(rep.apply_S(k, e.reshape(rep.nodes(level).shape), level).ravel())
    return np.array(cols).T


def test_adjoint_matches_weighted_matrix_adjoint():
    # brute force: S* = W_L^{-1} S^H W_{L+1} with W the diagonal node weights
    rep = cuntz.representation(annular_bank(2, 0.6), levels=2, base_points=3)
    rng = np.random.default_rng(0)
    for k in range(rep.N):
        S = matrix_of_S(rep, k, 1)
        W0 = rep.weights(1).ravel()
        W1 = rep.weights(2).ravel()
        adj = (np.conj(S.T) * W1[None, :]) / W0[:, None]
        eta = rep.random_function(2, rng)
        direct = rep.apply_S_adjoint(k, eta, 2).ravel()
        assert np.max(np.abs(adj @ eta.ravel() - direct)) <= 1e-14 * np.max(np.abs(direct))


def test_weights_are_self_similar():
    rep = cuntz.representation(annular_bank(1, 0.5), levels=3)
    for L in range(rep.levels + 1):
        assert math.fsum(rep.weights(L).ravel().tolist()) == pytest.approx(1.0, abs=1e-15)
    # sum over the outer digit gives back the weights one level down
    w2 = rep.weights(2)
    rho = rep.measure_rho
    assert np.allclose(np.sum(w2, axis=1), rep.weights(1), rtol=1e-15, atol=0)
    assert rho.sum() == pytest.approx(1.0, rel=1e-15)


def test_sigma_maps_tower_down():
    rep = cuntz.representation(random_bank(2, 1), levels=2, base_points=4)
    sys = rep.bank.branch
    up = rep.nodes(2)
    down = sys.sigma(up)
    assert np.max(np.abs(down - rep.nodes(1)[:, None, ...])) <= 1e-14


@pytest.mark.parametrize("factor", [1.01, 0.9])
def test_perturbed_bank_fails(factor):
    rep = cuntz.representation(annular_bank(1, 0.5), levels=3)
    report = cuntz.relation_report(cuntz.representation(cuntz.perturbed(rep.bank, 1, factor), levels=3))
    assert not report.passed(1e-10)
    assert report.max_isometry_residual == pytest.approx(abs(factor**2 - 1), rel=1e-10)


def test_report_is_deterministic_and_serializable():
    rep = cuntz.representation(fb.haar_bank(fb.BranchSystem(2)), levels=3)
    a = cuntz.relation_report(rep, n_tests=4, seed=9).to_json()
    b = cuntz.relation_report(rep, n_tests=4, seed=9).to_json()
    assert a == b
    doc = json.loads(a)
    assert doc["seed"] == 9 and doc["representation"]["nu"] == 2


def test_grid_guards():
    rep = cuntz.representation(fb.haar_bank(fb.BranchSystem(1)), levels=2)
    with pytest.raises(cuntz.GridError):
        rep.apply_S(0, np.ones(3), 0)
    with pytest.raises(cuntz.GridError):
        rep.apply_S(0, np.ones(rep.nodes(2).shape), 2)
    with pytest.raises(cuntz.GridError):
        rep.apply_S_adjoint(0, np.ones(rep.nodes(0).shape), 0)
    with pytest.raises(cuntz.GridError):
        cuntz.relation_report(rep, level=2)
    with pytest.raises(ValueError):
        cuntz.relation_report(rep, n_tests=0)


def test_unknown_conventions():
    with pytest.raises(ValueError):
        cuntz.representation(fb.haar_bank(fb.BranchSystem(1)), convention="other")
    with pytest.raises(ValueError):
        cuntz.representation(fb.haar_bank(fb.BranchSystem(1)), rho_convention="other")


@settings(max_examples=10, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2**16))
def test_random_banks_satisfy_relations(nu, seed):
    rep = cuntz.representation(random_bank(nu, seed), levels=2, base_points=4)
    assert cuntz.relation_report(rep, n_tests=2, seed=seed).passed(1e-12)


def test_haar_measure_is_self_similar_on_spiral():
    out = cuntz.measure_selfsimilarity_check(fb.BranchSystem(2, "q_spiral", 0.5), "haar")
    for mean, spread in out["ratios"].values():
        assert mean == pytest.approx(1 / 3, rel=1e-14)
        assert spread <= 1e-14
    assert out["identity_residual"] <= 1e-14


def test_arc_measure_is_self_similar_on_circle():
    out = cuntz.measure_selfsimilarity_check(fb.BranchSystem(3), "arc")
    assert out["identity_residual"] <= 1e-14


def test_lebesgue_measure_is_not_self_similar_on_spiral():
    out = cuntz.measure_selfsimilarity_check(fb.BranchSystem(1, "q_spiral", 0.5), "lebesgue")
    assert max(s for _, s in out["ratios"].values()) > 0.5
    assert out["identity_residual"] > 0.1
    worse = cuntz.measure_selfsimilarity_check(fb.BranchSystem(1, "q_spiral", 0.5), "lebesgue", rho=[1.0, 4.0])
    assert worse["identity_residual"] > out["identity_residual"]
