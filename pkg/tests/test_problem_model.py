from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ocoswitch.errors import InformationViolation, InvalidArgument, Unsupported
from ocoswitch.problem_model import (
    FeasibleSet,
    FunctionModel,
    InfoGate,
    Instance,
    Trajectory,
    gated_grad,
    minimizer,
    project,
    trajectory_costs,
)

from conftest import make_instance

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


def vec(d):
    return arrays(np.float64, d, elements=finite)


SETS = [
    FeasibleSet.all_space(2),
    FeasibleSet.ball([0.0, 0.0], 1.0),
    FeasibleSet.ball([0.3, -0.2], 0.8),
    FeasibleSet.box([-1.0, -1.0], [1.0, 1.0]),
    FeasibleSet.box([-0.5, -2.0], [1.5, 0.25]),
]


# --- projection -----------------------------------------------------------


@pytest.mark.parametrize(
    "s, p, expected",
    [
        (FeasibleSet.all_space(2), (2.0, 0.0), (2.0, 0.0)),
        (FeasibleSet.ball([0.0, 0.0], 1.0), (2.0, 0.0), (1.0, 0.0)),
        (FeasibleSet.box([-1.0, -1.0], [1.0, 1.0]), (2.0, 0.5), (1.0, 0.5)),
    ],
)
def test_project_examples(s, p, expected):
    np.testing.assert_allclose(project(s, p), expected, atol=0, rtol=1e-15)


def test_project_dimension_mismatch():
    with pytest.raises(InvalidArgument):
        project(FeasibleSet.ball([0.0, 0.0], 1.0), (1.0, 2.0, 3.0))


def test_sets_must_contain_origin():
    with pytest.raises(InvalidArgument):
        FeasibleSet.box([0.5], [1.0])
    with pytest.raises(InvalidArgument):
        FeasibleSet.ball([3.0], 1.0)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(SETS), vec(2), vec(2))
def test_projection_nonexpansive_and_idempotent(s, p, q):
    pp, pq = s.project(p), s.project(q)
    assert np.linalg.norm(pp - pq) <= np.linalg.norm(p - q) + 1e-12
    np.testing.assert_allclose(s.project(pp), pp, atol=1e-12)
    assert s.contains(pp)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(SETS), vec(2), vec(2))
def test_projection_variational_inequality(s, p, y):
    # <p - P(p), y' - P(p)> <= 0 for every y' in the set.
    proj = s.project(p)
    yy = s.project(y)
    assert float(np.dot(p - proj, yy - proj)) <= 1e-9


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(SETS), vec(2))
def test_projector_matches_project(s, p):
    np.testing.assert_allclose(s.projector()(p.copy()), s.project(p), atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(SETS), arrays(np.float64, (6, 2), elements=finite))
def test_row_wise_forms_match_scalar_forms(s, X):
    np.testing.assert_array_equal(s.contains_rows(X), [s.contains(x) for x in X])
    f = FunctionModel.diagonal([0.5, 3.0], [0.2, -1.0])
    np.testing.assert_allclose(f.values(X), [f.value(x) for x in X], rtol=1e-15, atol=0)


# --- function models ---------------------------------------------------------


@pytest.mark.parametrize(
    "f, x, val, g",
    [
        (FunctionModel.isotropic(1.0, [0.0, 0.0]), (3.0, 4.0), 12.5, (3.0, 4.0)),
        (FunctionModel.isotropic(2.0, [1.0, 0.0]), (1.0, 0.0), 0.0, (0.0, 0.0)),
        (FunctionModel.diagonal([1.0, 4.0], [0.0, 0.0]), (1.0, 1.0), 2.5, (1.0, 4.0)),
    ],
)
def test_eval_grad_examples(f, x, val, g):
    assert f.value(x) == val
    np.testing.assert_array_equal(f.grad(x), g)


def test_model_certifies_moduli():
    f = FunctionModel.diagonal([0.5, 3.0], [0.0, 1.0])
    assert (f.mu, f.ell) == (0.5, 3.0)
    with pytest.raises(InvalidArgument):
        FunctionModel.isotropic(0.0, [1.0])
    with pytest.raises(InvalidArgument):
        FunctionModel.diagonal([1.0, -1.0], [0.0, 0.0])


diag_models = st.builds(
    lambda a, c: FunctionModel.diagonal(a, c),
    arrays(np.float64, 3, elements=st.floats(0.05, 10)),
    vec(3),
)


@settings(max_examples=150, deadline=None)
@given(diag_models, vec(3), vec(3))
def test_quadratic_sandwich(f, x, y):
    # (mu/2)||y-x||^2 <= f(y) - f(x) - <grad f(x), y-x> <= (L/2)||y-x||^2
    gap = f.value(y) - f.value(x) - float(np.dot(f.grad(x), y - x))
    r2 = float(np.dot(y - x, y - x))
    scale = 1e-9 * (1.0 + abs(f.value(y)) + abs(f.value(x)))
    assert 0.5 * f.mu * r2 - scale <= gap <= 0.5 * f.ell * r2 + scale


@settings(max_examples=100, deadline=None)
@given(diag_models, vec(3))
def test_grad_matches_central_differences(f, x):
    h = 1e-5
    fd = np.array([(f.value(x + h * e) - f.value(x - h * e)) / (2 * h) for e in np.eye(3)])
    np.testing.assert_allclose(f.grad(x), fd, rtol=1e-6, atol=1e-6)


def test_function_roundtrip():
    for f in (FunctionModel.isotropic(2.0, [1.0, -1.0]), FunctionModel.diagonal([1.0, 3.0], [0.5, 0.0])):
        g = FunctionModel.from_dict(f.to_dict())
        np.testing.assert_array_equal(g.a, f.a)
        np.testing.assert_array_equal(g.c, f.c)


# --- minimizers ---------------------------------------------------------------


def test_minimizer_examples():
    x, interior = minimizer(FunctionModel.isotropic(1.0, [0.5, 0.5]), FeasibleSet.all_space(2))
    np.testing.assert_array_equal(x, [0.5, 0.5])
    assert interior
    x, interior = minimizer(FunctionModel.isotropic(1.0, [2.0, 0.0]), FeasibleSet.ball([0.0, 0.0], 1.0))
    np.testing.assert_allclose(x, [1.0, 0.0])
    assert not interior


def test_diagonal_box_minimizer_against_grid():
    f = FunctionModel.diagonal([1.0, 4.0], [2.0, 2.0])
    s = FeasibleSet.box([-1.0, -1.0], [1.0, 1.0])
    x, interior = minimizer(f, s)
    g = np.linspace(-1, 1, 401)
    X, Y = np.meshgrid(g, g, indexing="ij")
    vals = 0.5 * (1.0 * (X - 2) ** 2 + 4.0 * (Y - 2) ** 2)
    i, j = np.unravel_index(np.argmin(vals), vals.shape)
    np.testing.assert_allclose(x, [g[i], g[j]], atol=g[1] - g[0])
    np.testing.assert_allclose(x, [1.0, 1.0])
    assert not interior


def test_diagonal_ball_minimizer_against_grid():
    f = FunctionModel.diagonal([1.0, 6.0], [1.5, 1.0])
    s = FeasibleSet.ball([0.0, 0.0], 1.0)
    x, _ = minimizer(f, s)
    ang = np.linspace(0, 2 * np.pi, 200001)
    pts = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    vals = 0.5 * (1.0 * (pts[:, 0] - 1.5) ** 2 + 6.0 * (pts[:, 1] - 1.0) ** 2)
    best = pts[np.argmin(vals)]
    np.testing.assert_allclose(x, best, atol=1e-4)
    assert abs(np.linalg.norm(x) - 1.0) < 1e-12


def test_oracle_minimizer_must_be_supplied():
    f = FunctionModel.oracle(lambda x: float(x @ x), lambda x: 2 * x, mu=2.0, ell=2.0, dim=1)
    with pytest.raises(Unsupported):
        minimizer(f, FeasibleSet.box([-1.0], [1.0]))
    g = FunctionModel.oracle(lambda x: float(x @ x), lambda x: 2 * x, mu=2.0, ell=2.0, dim=1, minimizer=[0.0])
    np.testing.assert_array_equal(minimizer(g, FeasibleSet.box([-1.0], [1.0]))[0], [0.0])


# --- instances and costs ---------------------------------------------------------


def test_instance_validation():
    f = FunctionModel.isotropic(1.0, [0.0])
    with pytest.raises(InvalidArgument):
        Instance(FeasibleSet.all_space(2), np.zeros(2), (f,))
    with pytest.raises(InvalidArgument):
        Instance(FeasibleSet.box([-1.0], [1.0]), np.array([2.0]), (f,))
    with pytest.raises(InvalidArgument):
        Instance(FeasibleSet.all_space(1), np.zeros(1), ())
    with pytest.raises(InvalidArgument):
        Instance(FeasibleSet.all_space(1), np.zeros(1), (f,), "cubic")


def test_instance_roundtrip_and_moduli():
    inst = make_instance([0.5, 2.0, 1.0], [[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]],
                         feasible=FeasibleSet.box([-2.0, -2.0], [2.0, 2.0]))
    assert (inst.T, inst.d, inst.mu, inst.ell) == (3, 2, 0.5, 2.0)
    back = Instance.from_dict(inst.to_dict())
    np.testing.assert_array_equal(back.centers(), inst.centers())
    assert back.feasible.kind == "box"
    assert inst.interior


def test_trajectory_costs_include_first_move():
    inst = make_instance(1.0, [0.0, 0.0, 0.0], switching="linear")
    hit, sw = trajectory_costs(inst, [[0.0], [1.0], [0.0]])
    assert sw.sum() == 2.0
    assert hit.sum() == 0.5
    q = make_instance(2.0, [1.0, 1.0])
    traj = Trajectory.from_actions(q, [[1.0], [1.0]])
    assert traj.switching_total == 0.5 and traj.hitting_total == 0.0
    assert traj.consistent_with(q)
    with pytest.raises(InvalidArgument):
        trajectory_costs(q, [[1.0]])


# --- information gate ---------------------------------------------------------------


def test_gate_serves_previous_round():
    theta = np.array([0.7, -0.3])
    inst = make_instance([1.0, 1.0], [theta, [0.0, 0.0]])
    gate = InfoGate()
    g = gated_grad(gate, inst, 2, np.zeros(2))
    np.testing.assert_array_equal(g, -theta)
    assert len(gate.log) == 1 and gate.queries == {2: 1}


def test_gate_rejects_current_future_and_round_one():
    inst = make_instance([1.0, 1.0, 1.0], [1.0, 0.0, 2.0])
    with pytest.raises(InformationViolation):
        gated_grad(InfoGate(), inst, 2, [0.0], source=2)
    with pytest.raises(InformationViolation):
        gated_grad(InfoGate(), inst, 1, [0.0])
    with pytest.raises(InformationViolation):
        gated_grad(InfoGate(), inst, 4, [0.0])
    gate = InfoGate()
    gated_grad(gate, inst, 3, [0.0])
    with pytest.raises(InformationViolation):
        gated_grad(gate, inst, 2, [0.0])


@settings(max_examples=200, deadline=None)
@given(st.integers(-2, 8), st.integers(-2, 8))
def test_gate_never_serves_current_or_future(t, source):
    inst = make_instance(1.0, [0.0] * 6)
    gate = InfoGate()
    ok = 2 <= t <= inst.T and source == t - 1
    if ok:
        gated_grad(gate, inst, t, [0.0], source=source)
        assert gate.queries == {t: 1}
    else:
        with pytest.raises(InformationViolation):
            gated_grad(gate, inst, t, [0.0], source=source)
        assert gate.queries == {}


def test_round_oracle_expires():
    inst = make_instance(1.0, [1.0, 2.0, 3.0])
    gate = InfoGate(keep_points=False)
    g2 = gate.round_oracle(inst, 2)
    np.testing.assert_array_equal(g2(np.zeros(1)), [-1.0])
    gate.round_oracle(inst, 3)
    with pytest.raises(InformationViolation):
        g2(np.zeros(1))
    assert gate.log == [] and gate.queries == {2: 1}
