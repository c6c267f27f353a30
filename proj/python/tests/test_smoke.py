import json
import math
import os
from pathlib import Path

import pytest

import qgraph

DATA = Path(os.environ.get("QGRAPH_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))


def test_dirichlet_interval():
    p = qgraph.load(str(DATA / "interval_dirichlet.json"))
    lams = [e["lambda"] for e in qgraph.eigenvalues(p, 0.5, 10.0)]
    assert lams == pytest.approx([1.0, 4.0, 9.0], abs=1e-8)


def test_loop_multiplicities_dotted():
    p = qgraph.load(str(DATA / "loop.json"))
    evs = qgraph.eigenvalues(p, -1.0, 90.0, backend="dotted")
    assert [e["multiplicity"] for e in evs] == [1, 2]
    assert evs[1]["lambda"] == pytest.approx(4 * math.pi**2, abs=1e-8)


def test_dtn_refuses_dirichlet_spectrum():
    p = qgraph.load(str(DATA / "interval_dirichlet.json"))
    with pytest.raises(qgraph.PreconditionError):
        qgraph.eigenvalues(p, 0.5, 10.0, backend="dtn")


def test_secular_singular_at_eigenvalue():
    p = qgraph.load(str(DATA / "interval_dirichlet.json"))
    assert qgraph.secular(p, 1.0)["singular_values"][0] < 1e-10
    assert qgraph.secular(p, 0.5)["singular_values"][0] > 1e-2


def test_self_adjoint_and_malformed_input():
    p = qgraph.load(str(DATA / "star3.json"))
    ok, witness = qgraph.is_self_adjoint(p)
    assert ok and witness < 1e-12
    with pytest.raises(qgraph.InputError):
        qgraph.loads("{not json")


def test_chain_of_loops_compact_state():
    p = qgraph.load(str(DATA / "chain_of_loops.json"))
    state = qgraph.compact_state(p, math.pi**2, radius=0)
    assert state is not None
    assert state["residual"] < 1e-10
    assert sorted(s["edge"] for s in state["support"]) == ["p1", "p2"]


def test_free_chain_bands_have_no_flat_band():
    p = qgraph.load(str(DATA / "free_chain.json"))
    theta, bands = qgraph.band_structure(p, 8, 0.0, 30.0)
    assert theta.shape == (8, 1)
    first = bands[:, 0]
    expected = [min(t, 2 * math.pi - t) ** 2 for t in theta[:, 0]]
    assert list(first) == pytest.approx(expected, abs=1e-7)
    assert qgraph.flat_bands(p, 0.0, 30.0, grid=8) == []


def test_problem_round_trip():
    p = qgraph.load(str(DATA / "star3.json"))
    again = qgraph.loads(p.to_json())
    assert again.edge_ids == p.edge_ids
    assert json.loads(p.to_json())["conditions"]["type"] == "AB"
