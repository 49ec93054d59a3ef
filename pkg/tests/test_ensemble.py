import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import (EX1_DC, EX1_ETA_I, EX1_ITERS, EX1_L, EX2_DC, EX2_ETA_I,
                      EX2_ITERS, EX2_L)
from fecdesign.ensemble import (CheckDistribution, InnerEnsemble, StaircaseSpec,
                                check_distribution_from_mean, coded_rate,
                                edge_from_node, inner_complexity,
                                load_staircase_table, node_from_edge, nu_of,
                                theta_split, total_complexity)

R_IN_TARGET = 8.0 / 9.0


@given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=3, max_size=12),
       st.floats(min_value=0.0, max_value=0.8))
def test_node_edge_round_trip(raw, l0):
    raw = np.asarray(raw)
    raw[0] = 0.0
    if raw.sum() <= 1e-6:
        return
    L = np.concatenate([[l0], (1.0 - l0) * raw[1:] / raw[1:].sum()])
    lam = edge_from_node(L)
    back = node_from_edge(lam, l0)
    assert np.allclose(back, L, atol=1e-12)
    assert np.allclose(edge_from_node(back), lam, atol=1e-12)


def test_first_example_identities(ex1_ensemble):
    ens = ex1_ensemble
    assert ens.r_in == pytest.approx(R_IN_TARGET, abs=1e-3)
    assert ens.nu == pytest.approx(1.25, abs=2e-3)
    assert ens.l0 == pytest.approx(0.1556)
    ens.validate(tol=1e-3)
    # rate identity through the coded-rate definition
    degs = np.arange(1, len(ens.lam))
    assert np.sum(ens.lam[1:] / degs) == pytest.approx(
        1.0 / (EX1_DC * (1.0 - ens.r_c)), abs=1e-9)


def test_second_example_identities(ex2_ensemble):
    ens = ex2_ensemble
    assert ens.r_in == pytest.approx(R_IN_TARGET, abs=1e-3)
    assert ens.nu == pytest.approx(1.0, abs=2e-3)
    ens.validate(tol=1e-3)


def test_complexity_fixtures(ex1_ensemble, ex2_ensemble):
    e1 = inner_complexity(R_IN_TARGET, EX1_DC, ex1_ensemble.nu, EX1_ITERS)
    e2 = inner_complexity(R_IN_TARGET, EX2_DC, ex2_ensemble.nu, EX2_ITERS)
    assert e1 == pytest.approx(EX1_ETA_I, rel=0.01)
    # published score reflects 4-decimal coefficient rounding
    assert e2 == pytest.approx(EX2_ETA_I, rel=0.015)


def test_total_complexity():
    assert total_complexity(30.0, 0.9375) == pytest.approx(32.0)
    assert total_complexity(30.0, 0.9375, p_post=2.0) == pytest.approx(34.0)
    with pytest.raises(ValueError):
        total_complexity(30.0, 1.0)


@given(st.floats(min_value=0.0, max_value=6.0))
def test_theta_split_mixture(nu):
    theta, lo, hi = theta_split(nu)
    assert 0.0 < theta <= 1.0
    assert lo <= nu <= hi
    assert theta * lo + (1.0 - theta) * hi == pytest.approx(nu, abs=1e-12)


def test_theta_split_integer():
    assert theta_split(2.0) == (1.0, 2, 2)
    with pytest.raises(ValueError):
        theta_split(-0.1)


def test_check_distribution():
    cd = check_distribution_from_mean(24.0)
    assert isinstance(cd, CheckDistribution)
    assert np.allclose(cd.rho, [1.0, 0.0])
    cd = check_distribution_from_mean(22.75)
    w = cd.node_fractions()
    assert cd.degrees.tolist() == [22, 23]
    assert float(np.dot(cd.degrees, w)) == pytest.approx(22.75, abs=1e-12)
    with pytest.raises(ValueError):
        check_distribution_from_mean(1.5)


def test_nu_and_rate_helpers(ex1_ensemble):
    assert nu_of(ex1_ensemble.lam, EX1_DC) == pytest.approx(ex1_ensemble.nu)
    assert coded_rate(ex1_ensemble.lam, EX1_DC) == pytest.approx(ex1_ensemble.r_c)
    with pytest.raises(ValueError):
        coded_rate([0.0, 0.0, 1.0], 1.5)  # r_c would be <= 0


def test_ensemble_json_round_trip(ex1_ensemble):
    back = InnerEnsemble.from_json(ex1_ensemble.to_json())
    assert np.array_equal(back.L, ex1_ensemble.L)
    assert back.dc_bar == ex1_ensemble.dc_bar
    assert back.r_in == pytest.approx(ex1_ensemble.r_in, abs=1e-15)


def test_staircase_table_and_packing():
    table = load_staircase_table()
    assert len(table) == 1
    sc = table[0]
    assert sc.name == "staircase-15-16"
    assert sc.r_sc == pytest.approx(0.9375)
    assert sc.p_sc == pytest.approx(5.02e-3)
    assert sc.block_side == 704
    assert sc.packing_ratio(61952) == 8
    with pytest.raises(ValueError):
        sc.packing_ratio(1000)
    with pytest.raises(ValueError):
        StaircaseSpec(name="bad", r_sc=1.2, p_sc=1e-3, block_side=8)


def test_invalid_distributions():
    with pytest.raises(ValueError):
        InnerEnsemble.from_node([0.5, 0.4], 24.0)  # does not sum to 1
    with pytest.raises(ValueError):
        node_from_edge([0.0, 0.5, 0.5], 1.0)
