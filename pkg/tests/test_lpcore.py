import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netslice.formulation import build_relaxation
from netslice.lpcore import (FEAS_TOL, LPBuilder, ModelError, Relation, Status, export_mps,
                             solve_external, solve_lp, solve_simplex)

from conftest import make_t1
from lp_suite import build, hand_cases, random_cases, vertex_optimum

L, E, G = Relation.LE, Relation.EQ, Relation.GE


@pytest.mark.parametrize("backend", ["simplex", "highs"])
@pytest.mark.parametrize("case", hand_cases(), ids=lambda c: c[0])
def test_hand_cases(case, backend):
    _, model, status, opt = case
    sol = solve_lp(model, backend)
    assert sol.status is status
    if opt is not None:
        assert sol.objective == pytest.approx(opt, abs=1e-6)


def test_lower_row_point():
    sol = solve_lp(build([(0, 10)], [1], [([1], G, 3)]))
    assert sol.values[0] == pytest.approx(3)


@pytest.mark.parametrize("case", random_cases(40, seed=7), ids=lambda c: c[0])
def test_against_vertex_enumeration(case):
    _, model, status, opt = case
    sol = solve_lp(model)
    assert sol.status is status
    if opt is not None:
        assert sol.objective == pytest.approx(opt, abs=1e-6)
        assert model.violation(sol.values) <= FEAS_TOL
        assert np.all(sol.values >= model.lower - FEAS_TOL)
        assert np.all(sol.values <= model.upper + FEAS_TOL)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6))
def test_weak_duality_and_agreement(seed):
    (_, model, status, opt), = random_cases(1, seed=seed)
    mine, ref = solve_lp(model, "simplex"), solve_lp(model, "highs")
    assert mine.status is ref.status is status
    if status is Status.OPTIMAL:
        assert mine.objective == pytest.approx(ref.objective, abs=1e-6)
        assert mine.dual_bound <= mine.objective + 1e-6
        assert mine.dual_bound == pytest.approx(mine.objective, abs=1e-6)


def test_vertex_oracle_square():
    assert vertex_optimum([(0, 1), (0, 1)], [-1, -1], [([1, 1], L, 1)]) == pytest.approx(-1)


def test_deterministic():
    model, _ = build_relaxation(make_t1())
    a, b = solve_simplex(model), solve_simplex(model)
    assert a.status is b.status
    assert abs(a.objective - b.objective) <= 1e-9
    assert np.array_equal(a.values, b.values)


def test_warm_start_reuses_basis():
    model, _ = build_relaxation(make_t1())
    cold = solve_lp(model)
    warm = solve_lp(model, warm_start=cold.basis)
    assert warm.objective == pytest.approx(cold.objective, abs=1e-9)
    assert warm.iterations <= 1


def test_model_validation():
    b = LPBuilder()
    b.add_var("x", 1, 0)
    with pytest.raises(ModelError):
        b.build()
    b = LPBuilder()
    b.add_var("x", 0, 1)
    with pytest.raises((ModelError, KeyError, IndexError)):
        b.add_row({3: 1.0}, L, 1)
        b.build()


def test_mps_skeleton():
    exp = export_mps(build([(0, 10)], [1], [([1], G, 3)]))
    lines = exp.text.splitlines()
    heads = [ln.split()[0] for ln in lines if ln and not ln.startswith(" ")]
    assert heads == ["NAME", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"]
    assert all(len(name) <= 8 for name in list(exp.columns) + list(exp.rows))
    assert exp.columns == {"C0000000": "v0"}


def test_mps_equality_row():
    exp = export_mps(build([(0, 5), (0, 5)], [2, 3], [([1, 1], E, 4)]))
    rows = exp.text.split("ROWS")[1].split("COLUMNS")[0].split()
    assert rows == ["N", "COST", "E", "R0000000"]
    table = exp.mangling_table().splitlines()
    assert table[0] == "kind\tmps\toriginal"
    assert "col\tC0000001\tv1" in table


def test_mps_round_trip_external():
    pytest.importorskip("highspy")
    from netslice.lpcore import highspy_solver

    model = build([(0, 1), (0, 1)], [-1, -1], [([1, 1], L, 1)])
    sol = solve_external(model, highspy_solver)
    assert sol.objective == pytest.approx(-1, abs=1e-6)
    assert sol.objective == pytest.approx(solve_lp(model).objective, abs=1e-6)


def test_mps_round_trip_relaxation():
    pytest.importorskip("highspy")
    from netslice.lpcore import highspy_solver

    model, _ = build_relaxation(make_t1())
    assert solve_external(model, highspy_solver).objective == pytest.approx(1.005, abs=1e-6)


def test_external_adapter_contract():
    # any callable taking MPS text works as an external solver
    model = build([(0, 10)], [1], [([1], G, 3)])
    seen = {}

    def fake(text):
        seen["text"] = text
        return Status.OPTIMAL, {"C0000000": 3.0}

    sol = solve_external(model, fake)
    assert "ENDATA" in seen["text"]
    assert sol.objective == 3.0
