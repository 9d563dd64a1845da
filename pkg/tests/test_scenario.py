import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ksforge.rays import KET0, KET1, MINUS, PLUS, Ray, ket
from ksforge.scenario import (
    Colouring, DensityOperator, Scenario, ScenarioError, Verdict, check_assignment, check_model,
    complete_sets, enumerate_ks_colourings, find_ks_colouring, is_classical_model, is_colouring,
    maximal_cliques, quantum_model, scenario_from_rays,
)


def brute_colourings(s: Scenario):
    out = []
    for bits in itertools.product((0, 1), repeat=len(s.vertices)):
        c = dict(zip(s.vertices, bits))
        if all(sum(c[v] for v in e) == 1 for e in s.hyperedges):
            out.append(c)
    return out


@st.composite
def hypergraphs(draw):
    n = draw(st.integers(1, 8))
    verts = [f"v{i}" for i in range(n)]
    edges = draw(st.lists(
        st.sets(st.sampled_from(verts), min_size=1, max_size=min(4, n)).map(frozenset),
        max_size=6, unique=True))
    return Scenario(tuple(verts), tuple(tuple(sorted(e)) for e in edges))


@given(hypergraphs())
@settings(max_examples=200, deadline=None)
def test_enumeration_matches_brute_force(s):
    got = enumerate_ks_colourings(s)
    want = brute_colourings(s)
    assert not got.truncated
    assert sorted(map(lambda c: tuple(c.values()), got)) == sorted(tuple(c[v] for v in s.vertices) for c in want)
    first = find_ks_colouring(s)
    assert (first is None) == (not want)
    if first is not None:
        assert is_colouring(s, first)
        assert dict(first) == dict(got[0])


def test_enumeration_cap_reports_truncation():
    s = Scenario(tuple("abcdef"), (("a", "b"), ("c", "d"), ("e", "f")))
    full = enumerate_ks_colourings(s)
    assert len(full) == 8 and not full.truncated
    part = enumerate_ks_colourings(s, cap=3)
    assert len(part) == 3 and part.truncated
    with pytest.raises(ValueError):
        enumerate_ks_colourings(s, cap=0)


@given(st.integers(1, 9), st.data())
@settings(max_examples=100)
def test_maximal_cliques_brute_force(n, data):
    pairs = list(itertools.combinations(range(n), 2))
    edges = data.draw(st.sets(st.sampled_from(pairs))) if pairs else set()
    adj = [0] * n
    for i, j in edges:
        adj[i] |= 1 << j
        adj[j] |= 1 << i

    def clique(vs):
        return all((adj[i] >> j) & 1 for i, j in itertools.combinations(vs, 2))

    cliques = [set(c) for k in range(1, n + 1) for c in itertools.combinations(range(n), k) if clique(c)]
    maximal = {frozenset(c) for c in cliques if not any(c < d for d in cliques)}
    got = {frozenset(i for i in range(n) if (m >> i) & 1) for m in maximal_cliques(adj)}
    assert got == maximal


def test_scenario_validation():
    with pytest.raises(ScenarioError):
        Scenario(("a", "a"), ())
    with pytest.raises(ScenarioError):
        Scenario(("a",), (("b",),))
    with pytest.raises(ScenarioError):
        Scenario(("a", "b"), (("a", "b"), ("b", "a")))
    s = Scenario(("b", "a"), (("a", "b"),))
    assert s.hyperedges == (("b", "a"),)


def test_qubit_xz_scenario():
    s, a = scenario_from_rays([KET0, KET1, PLUS, MINUS], ids=["0", "1", "+", "-"])
    assert s.edge_sets() == {frozenset({"0", "1"}), frozenset({"+", "-"})}
    assert len(enumerate_ks_colourings(s)) == 4
    check_assignment(s, a)


def test_given_bases_and_errors():
    rays = [KET0, KET1, PLUS, MINUS]
    s, _ = scenario_from_rays(rays, bases=[[0, 1], ["v2", MINUS]])
    assert len(s.hyperedges) == 2
    with pytest.raises(ScenarioError):
        scenario_from_rays(rays, bases=[[0, 2]])
    with pytest.raises(ScenarioError):
        scenario_from_rays([KET0, Ray([1j, 0])])
    with pytest.raises(ScenarioError):
        scenario_from_rays([KET0, Ray([1, 0, 0])])


def test_complete_sets_in_c3():
    M = np.eye(3, dtype=complex)
    assert complete_sets(M) == [(0, 1, 2)]


def test_density_operator_validation():
    DensityOperator.pure(PLUS)
    with pytest.raises(ValueError):
        DensityOperator(np.array([[1, 1], [0, 0]]))
    with pytest.raises(ValueError):
        DensityOperator(np.eye(2))
    with pytest.raises(ValueError):
        DensityOperator(np.diag([1.5, -0.5]))
    rho = DensityOperator.mixture([0.5, 0.5], [KET0, PLUS])
    assert DensityOperator.from_json(rho.to_json()).matrix == pytest.approx(rho.matrix)


def test_quantum_and_classical_models():
    s, a = scenario_from_rays([KET0, KET1, PLUS, MINUS])
    p = quantum_model(s, a, DensityOperator.pure(KET0))
    check_model(s, p)
    res = is_classical_model(s, p)
    assert res.verdict == Verdict.CLASSICAL and res.n_colourings == 4
    with pytest.raises(ScenarioError):
        check_model(s, {v: 0.5 for v in s.vertices[:3]})
    with pytest.raises(ScenarioError):
        check_model(s, {v: 0.9 for v in s.vertices})


def test_non_classical_model_without_colourings():
    # a scenario with no colourings at all: any model is non-classical
    s = Scenario(tuple("abc"), (("a", "b"), ("b", "c"), ("a", "c")))
    res = is_classical_model(s, {"a": 0.5, "b": 0.5, "c": 0.5})
    assert res.verdict == Verdict.NON_CLASSICAL and res.n_colourings == 0


def test_truncated_enumeration_is_inconclusive():
    # pentagon-like model outside a capped list
    s = Scenario(tuple("abcdef"), (("a", "b"), ("c", "d"), ("e", "f")))
    p = {v: 0.5 for v in s.vertices}
    res = is_classical_model(s, p, cap=1)
    assert res.verdict == Verdict.INCONCLUSIVE
    assert is_classical_model(s, p).verdict == Verdict.CLASSICAL


def test_is_colouring_rejects_bad_values():
    s = Scenario(("a", "b"), (("a", "b"),))
    assert is_colouring(s, Colouring(a=1, b=0))
    assert not is_colouring(s, {"a": 1, "b": 1})
    assert not is_colouring(s, {"a": 1})
    assert not is_colouring(s, {"a": 2, "b": -1})


def test_product_scenario_from_labels():
    rays = [ket(x + y) for x in "01" for y in "+-"]
    s, _ = scenario_from_rays(rays)
    assert len(s.hyperedges) == 1
