import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_net
from dynmln.errors import DataError
from dynmln.netdata import (
    CellTable, DynMultiNet, HoldoutSpec, MISSING, apply_holdout, load_network, pair_arrays,
    pair_index, parse_selector, to_square, write_network,
)

HEAD = "#dynmln v=3 k=1 grid=1.0\nlayer,time_index,u,v,value\n"


def write(tmp_path, text, name="net.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_pair_index_matches_tril_order():
    vv, uu = pair_arrays(6)
    assert np.array_equal(pair_index(vv, uu), np.arange(15))


def test_edge_csv_default_zero_fill(tmp_path):
    net = load_network(write(tmp_path, HEAD + "1,1,1,2,1\n1,1,1,3,0\n"))
    assert net.n_actors == 3 and net.n_layers == 1 and net.n_times == 1
    assert net.obs[0, 0, pair_index(1, 0)] == 1
    assert net.obs[0, 0, pair_index(2, 0)] == 0
    assert net.obs[0, 0, pair_index(2, 1)] == 0


def test_edge_csv_na_is_missing(tmp_path):
    net = load_network(write(tmp_path, HEAD + "1,1,2,3,NA\n"))
    assert net.obs[0, 0, pair_index(2, 1)] == MISSING
    assert net.missing.sum() == 1


def test_rows_with_u_greater_than_v_are_transposed(tmp_path):
    a = load_network(write(tmp_path, HEAD + "1,1,3,1,1\n", "a.csv"))
    b = load_network(write(tmp_path, HEAD + "1,1,1,3,1\n", "b.csv"))
    assert a == b


@pytest.mark.parametrize(
    "row, msg",
    [
        ("1,1,2,2,1", "self-loop"),
        ("1,1,1,4,1", "out of range"),
        ("2,1,1,2,1", "out of range"),
        ("1,1,1,2", "malformed"),
        ("1,x,1,2,1", "malformed"),
        ("1,1,1,2,2", "0, 1 or NA"),
    ],
)
def test_edge_csv_errors_carry_line_numbers(tmp_path, row, msg):
    with pytest.raises(DataError, match=msg) as exc:
        load_network(write(tmp_path, HEAD + "1,1,1,3,1\n" + row + "\n"))
    assert exc.value.line == 4
    assert "line 4" in str(exc.value)


def test_conflicting_duplicate(tmp_path):
    with pytest.raises(DataError, match="conflicting"):
        load_network(write(tmp_path, HEAD + "1,1,1,2,1\n1,1,2,1,0\n"))
    # consistent duplicates are fine
    load_network(write(tmp_path, HEAD + "1,1,1,2,1\n1,1,2,1,1\n"))


def test_bad_header(tmp_path):
    with pytest.raises(DataError, match="header"):
        load_network(write(tmp_path, "layer,time_index,u,v,value\n"))
    with pytest.raises(DataError, match="strictly increasing"):
        load_network(write(tmp_path, "#dynmln v=3 k=1 grid=2,1\nlayer,time_index,u,v,value\n"))


def test_row_order_independent(tmp_path):
    rows = ["1,1,1,2,1", "1,1,2,3,NA", "1,1,1,3,1"]
    a = load_network(write(tmp_path, HEAD + "\n".join(rows) + "\n", "a.csv"))
    b = load_network(write(tmp_path, HEAD + "\n".join(rows[::-1]) + "\n", "b.csv"))
    assert a == b


@given(st.integers(0, 10_000), st.sampled_from(["edge-csv", "dense-csv"]))
def test_round_trip(tmp_path_factory, seed, fmt):
    net = random_net(V=4, K=2, n=3, p=0.4, p_missing=0.2, seed=seed)
    d = tmp_path_factory.mktemp("rt")
    path = d / ("net.csv" if fmt == "edge-csv" else "dense")
    write_network(net, path, fmt)
    assert load_network(path, fmt) == net


def test_dense_csv_asymmetric_rejected(tmp_path):
    net = random_net(V=3, K=1, n=1)
    write_network(net, tmp_path / "d", "dense-csv")
    (tmp_path / "d" / "Y_k1_t1.csv").write_text("0,1,0\n0,0,0\n0,0,0\n")
    with pytest.raises(DataError, match="symmetric"):
        load_network(tmp_path / "d", "dense-csv")


def test_invariants_enforced():
    with pytest.raises(DataError):
        DynMultiNet(1, [1.0], np.zeros((1, 1, 0)))
    with pytest.raises(DataError):
        DynMultiNet(3, [1.0, 1.0], np.zeros((1, 2, 3)))
    with pytest.raises(DataError):
        DynMultiNet(3, [1.0], np.full((1, 1, 3), 2))
    net = random_net()
    with pytest.raises(ValueError):
        net.obs[0, 0, 0] = 1  # read-only


def test_square_is_symmetric_with_nan_for_missing():
    net = random_net(p_missing=0.3, seed=3)
    sq = net.square()
    assert np.array_equal(np.isnan(sq), np.isnan(sq.transpose(0, 1, 3, 2)))
    vv, uu = pair_arrays(net.n_actors)
    assert np.array_equal(np.isnan(sq[..., vv, uu]), net.missing)


# ------------------------------------------------------------------ hold-out


def test_holdout_paper_protocol_counts():
    net = random_net(V=30, K=2, n=17, seed=1)
    masked, truth = apply_holdout(net, HoldoutSpec.parse("layer=2 times=13..17"))
    assert len(truth) == 5 * 435
    assert masked.missing.sum() == 5 * 435
    assert masked.missing[1, 12:].all() and not masked.missing[0].any()


def test_empty_spec_is_identity(small_net):
    masked, truth = apply_holdout(small_net, HoldoutSpec())
    assert masked == small_net and len(truth) == 0


def test_already_missing_cells_excluded_from_truth():
    net = random_net(V=5, K=2, n=4, p_missing=0.5, seed=4)
    masked, truth = apply_holdout(net, HoldoutSpec.parse("layer=1 times=1..4"))
    assert len(truth) == int((~net.missing[0]).sum())
    assert np.all(np.isin(truth.value, (0, 1)))


def test_selector_matching_nothing_warns():
    net = random_net(V=3, K=1, n=1)
    obs = np.full(net.obs.shape, MISSING, dtype=np.int8)
    net = DynMultiNet(3, net.grid, obs)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        _, truth = apply_holdout(net, HoldoutSpec.parse("layer=1 times=1..1"))
    assert len(truth) == 0 and any("matches no" in str(x.message) for x in w)


@given(st.integers(0, 10_000))
def test_unmask_restores_original(seed):
    net = random_net(V=6, K=2, n=5, p_missing=0.1, seed=seed)
    spec = HoldoutSpec.parse("layer=2 times=2..4\nlayer=1 times=5..5 pairs=(1,2);(6,3)")
    masked, truth = apply_holdout(net, spec)
    assert masked.with_cells(truth) == net


def test_selector_parsing():
    s = parse_selector("layer=2 times=13..17")
    assert (s.layer, s.t_start, s.t_end, s.pairs) == (2, 13, 17, None)
    s = parse_selector("layer=1 times=3 pairs=(1,2);(4,3)")
    assert (s.t_start, s.t_end, s.pairs) == (3, 3, ((1, 2), (4, 3)))
    assert HoldoutSpec.parse(str(HoldoutSpec.parse("layer=1 times=1..2 pairs=(1,2)"))).entries[0].pairs == ((1, 2),)
    with pytest.raises(DataError):
        parse_selector("layer=1")
    with pytest.raises(DataError):
        parse_selector("layer=1 times=4..2")
    with pytest.raises(DataError):
        apply_holdout(random_net(), HoldoutSpec.parse("layer=3 times=1..1"))


def test_cell_table_csv_round_trip(tmp_path):
    cells = CellTable([0, 1], [2, 0], [3, 1], [0, 0], [1, 0])
    cells.write_csv(tmp_path / "c.csv")
    back = CellTable.read_csv(tmp_path / "c.csv")
    for f in ("layer", "time", "v", "u"):
        assert np.array_equal(getattr(back, f), getattr(cells, f))
    assert np.array_equal(back.value, [1.0, 0.0])


def test_to_square_symmetry():
    flat = np.arange(6.0)
    sq = to_square(flat, 4)
    assert np.array_equal(sq, sq.T) and np.all(np.diag(sq) == 0)
