import numpy as np
import pytest

import oracles
from fecdesign.codegen import (QcProtograph, SparseParityCheck,
                               _largest_remainder, build_qc, contract_lifted,
                               expand_protograph, girth, info_set,
                               lambda_distance, qc_girth_from_base,
                               sample_random)
from fecdesign.ensemble import InnerEnsemble


@pytest.fixture(scope="module")
def small_ens():
    # low-rate ensemble that samples cleanly at short lengths
    return InnerEnsemble.from_node([0.0, 0.2, 0.5, 0.3], 4.0)


def test_largest_remainder():
    counts = _largest_remainder([0.21, 0.33, 0.46], 100)
    assert counts.sum() == 100
    assert np.all(np.abs(counts - np.array([21, 33, 46])) <= 1)


def test_duplicate_edges_rejected():
    with pytest.raises(ValueError):
        SparseParityCheck(n_rows=2, n_cols=2, edge_row=np.array([0, 0]),
                          edge_col=np.array([1, 1]))


def test_sample_random_matches_profile(ex1_ensemble):
    m = sample_random(ex1_ensemble, 12000, seed=4)
    # integer average check degree: every row at exactly that degree
    assert set(m.row_degrees().tolist()) == {24}
    # degree-one columns spread one-or-two per check (nu = 1.25)
    ones = np.nonzero(m.col_degrees() == 1)[0]
    per_row = np.bincount(m.edge_row[np.isin(m.edge_col, ones)],
                          minlength=m.n_rows)
    assert set(per_row.tolist()) <= {1, 2}
    assert lambda_distance(m.edge_lambda(), ex1_ensemble.lam) <= 0.02
    assert m.info_cols is not None


def test_sample_random_deterministic(small_ens):
    a = sample_random(small_ens, 300, seed=7)
    b = sample_random(small_ens, 300, seed=7)
    c = sample_random(small_ens, 300, seed=8)
    assert np.array_equal(a.edge_row, b.edge_row)
    assert np.array_equal(a.edge_col, b.edge_col)
    assert not (np.array_equal(a.edge_row, c.edge_row) and
                np.array_equal(a.edge_col, c.edge_col))


def test_save_load_round_trip(tmp_path, small_ens):
    m = sample_random(small_ens, 200, seed=1)
    path = tmp_path / "m.txt"
    m.save(path)
    back = SparseParityCheck.load(path)
    assert back.n_rows == m.n_rows and back.n_cols == m.n_cols
    assert np.array_equal(back.edge_row, m.edge_row)
    assert np.array_equal(back.edge_col, m.edge_col)
    assert np.array_equal(back.info_cols, m.info_cols)


def test_girth_known_cases():
    # 2x2 all-ones: the shortest possible Tanner cycle
    m = SparseParityCheck(n_rows=2, n_cols=2,
                          edge_row=np.array([0, 0, 1, 1]),
                          edge_col=np.array([0, 1, 0, 1]))
    assert girth(m) == 4
    # chain (tree): no cycle at all
    tree = SparseParityCheck(n_rows=3, n_cols=4,
                             edge_row=np.array([0, 0, 1, 1, 2, 2]),
                             edge_col=np.array([0, 1, 1, 2, 2, 3]))
    assert girth(tree) == np.inf
    assert girth(m, depth_limit=1) == np.inf  # truncated below the cycle


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_girth_against_edge_removal_oracle(small_ens, seed):
    m = sample_random(small_ens, 40, seed=seed, avoid_four=False)
    assert girth(m) == oracles.girth_by_edge_removal(m)


def test_expand_contract_round_trip():
    rng = np.random.default_rng(3)
    base = rng.integers(-1, 8, size=(3, 6))
    proto = QcProtograph(base=base, z=8)
    lifted = expand_protograph(proto)
    back = contract_lifted(lifted, 8)
    assert np.array_equal(back.base, base)
    # degrees replicate the base profile Z-fold
    nz = np.count_nonzero(base >= 0)
    assert lifted.n_edges == nz * 8
    # one stray edge breaks the circulant structure
    broken = SparseParityCheck(n_rows=8, n_cols=16,
                               edge_row=np.concatenate([np.arange(8), [0]]),
                               edge_col=np.concatenate([np.arange(8), [9]]))
    with pytest.raises(ValueError):
        contract_lifted(broken, 8)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_qc_girth_classifier_against_bfs(seed):
    rng = np.random.default_rng(seed)
    base = rng.integers(0, 16, size=(3, 7))
    proto = QcProtograph(base=base, z=16)
    lifted = expand_protograph(proto)
    classified = qc_girth_from_base(proto)
    exact = girth(lifted)
    if classified < 8:
        assert exact == classified
    else:
        assert exact >= 8


def test_build_qc_short_length(ex1_ensemble):
    proto = build_qc(ex1_ensemble, 6000, 0.03, 8, seed=0)
    lifted = expand_protograph(proto)
    assert abs(lifted.n_cols - 6000) <= 0.03 * 6000
    assert proto.girth in (6, 8)
    assert proto.girth == qc_girth_from_base(proto)
    assert lambda_distance(lifted.edge_lambda(), ex1_ensemble.lam) <= 0.02


def test_build_qc_impossible_tolerance(ex1_ensemble):
    with pytest.raises(ValueError):
        build_qc(ex1_ensemble, 2001, 0.0, 8, seed=0)
    with pytest.raises(ValueError):
        build_qc(ex1_ensemble, 500, 0.01, 8, seed=0)


def test_protograph_save_load(tmp_path):
    base = np.array([[0, 3, -1], [5, -1, 2]])
    proto = QcProtograph(base=base, z=16, girth=8)
    path = tmp_path / "p.txt"
    proto.save(path)
    back = QcProtograph.load(path)
    assert np.array_equal(back.base, base)
    assert back.z == 16 and back.girth == 8


@pytest.mark.parametrize("seed", [0, 5])
def test_info_set_complement_is_invertible(small_ens, seed):
    m = sample_random(small_ens, 60, seed=seed)
    info = info_set(m)
    h = oracles.dense_matrix(m)
    parity = np.setdiff1d(np.arange(m.n_cols), info)
    assert len(parity) == oracles.gf2_rank(h)
    assert oracles.gf2_rank(h[:, parity]) == len(parity)


def test_lambda_distance():
    assert lambda_distance(np.array([0.0, 0.5, 0.5]),
                           np.array([0.0, 0.5, 0.25, 0.25])) == pytest.approx(0.5)
    assert lambda_distance(np.array([1.0]), np.array([1.0])) == 0.0
