from __future__ import annotations

import math

import numpy as np
import pytest

from ocoswitch import bounds as bd
from ocoswitch.adversary import gen_omgd_lb
from ocoswitch.errors import InvalidArgument
from ocoswitch.offline_opt import brute_force_opt, solve_opt_quadratic
from ocoswitch.problem_model import FeasibleSet

from conftest import make_instance

ZERO = bd.PathStats(0.0, 0.0, 0.0)


# --- path statistics ------------------------------------------------------------


def test_path_stats_examples():
    ps = bd.path_stats(gen_omgd_lb(1.0, 2.0, 0.8))
    assert (ps.pT, ps.p2T, ps.x1norm) == pytest.approx((0.8, 0.64, 0.8), abs=1e-15)
    ps = bd.path_stats(make_instance(1.0, [0.0, 1.0, 3.0]))
    assert (ps.pT, ps.p2T) == (3.0, 5.0)
    ps = bd.path_stats(make_instance([1.0, 3.0], [[0.5, 0.5], [0.5, 0.5]]))
    assert (ps.pT, ps.p2T, ps.sumFstar, ps.gradSq) == (0.0, 0.0, 0.0, 0.0)


def test_path_stats_boundary_gradients():
    inst = make_instance(2.0, [3.0, -3.0], feasible=FeasibleSet.box([-1.0], [1.0]))
    ps = bd.path_stats(inst)
    # Minimizers are the clamped centers +-1; each gradient has size 2 * 2.
    assert (ps.pT, ps.p2T, ps.x1norm) == (2.0, 4.0, 1.0)
    assert ps.gradSq == 32.0
    assert ps.sumFstar == 8.0


# --- online cost bounds ------------------------------------------------------------------


def test_total_cost_interior_alpha_zero():
    ps = bd.PathStats(pT=1.5, p2T=1.25, x1norm=0.5, sumFstar=0.0)
    rep = bd.omgd_total_cost_bound(ps, 0.5, 3.0, None, "quadratic")
    assert rep.value == (3.0 + 5.0) * (0.25 + 2.5)
    assert bd.omgd_total_cost_bound(ZERO, 1.0, 2.0).value == 0.0
    assert bd.omgd_total_cost_bound(bd.PathStats(0, 0, 0, sumFstar=1.5), 1.0, 2.0).value == 1.5


def test_total_cost_linear_form():
    ps = bd.PathStats(pT=2.0, p2T=1.0, x1norm=1.0)
    rep = bd.omgd_total_cost_bound(ps, 1.0, 2.0, None, "linear")
    assert rep.value == 2.0 * (1.0 + 2.0) + 3.0 + 6.0


def test_gamma_case_matches_optimized_alpha():
    ps = bd.PathStats(pT=1.0, p2T=2.0, x1norm=0.0, sumFstar=0.3, gradSq=8.0)
    gamma = bd.gamma_of(ps)
    assert gamma == 4.0
    rep = bd.gamma_cost_bound(ps, 1.5)
    assert rep.value == pytest.approx(0.3 + (2 * 1.5 + 2 * 2.0 + 10) * 2.0, rel=1e-15)
    assert rep.inputs["alpha"] == 1.0  # sqrt(gamma) / 2


def test_optimal_alpha_minimises_the_bound():
    ps = bd.PathStats(pT=1.0, p2T=0.7, x1norm=0.4, sumFstar=0.1, gradSq=2.3)
    a = bd.optimal_alpha(ps)
    best = bd.omgd_total_cost_bound(ps, 1.0, 2.0, a).value
    for other in np.linspace(0.1 * a, 5 * a, 50):
        assert bd.omgd_total_cost_bound(ps, 1.0, 2.0, float(other)).value >= best - 1e-12


def test_alpha_zero_with_gradients_rejected():
    ps = bd.PathStats(pT=1.0, p2T=1.0, x1norm=0.0, gradSq=1.0)
    with pytest.raises(InvalidArgument):
        bd.omgd_total_cost_bound(ps, 1.0, 1.0, 0.0)
    with pytest.raises(InvalidArgument):
        bd.hitting_bound(ps, 1.0, -1.0)


def test_switching_and_distance_bounds():
    ps = bd.PathStats(pT=2.0, p2T=3.0, x1norm=0.5)
    assert bd.sum_dist_sq_bound(ps).value == 2 * 0.25 + 12.0
    assert bd.switching_bound(ps, "quadratic").value == 5 * 0.25 + 30.0
    assert bd.switching_bound(ps, "linear").value == 1.5 + 6.0


# --- OPT bounds ------------------------------------------------------------------------------


def test_opt_lower_bound_examples():
    assert bd.opt_lower_bound(bd.PathStats(0.0, 6.0, 2.0), 1.0, "quadratic").value == pytest.approx(1.0)
    assert bd.opt_lower_bound(bd.PathStats(1.0, 1.0, 1.0), 1.0, "linear").value == pytest.approx(0.4)
    assert bd.opt_lower_bound(bd.PathStats(0, 0, 0, sumFstar=2.5), 3.0).value == 2.5
    with pytest.raises(InvalidArgument):
        bd.opt_lower_bound(ZERO, 0.0)


def test_identical_f_bound_is_single_round_optimum():
    for mu in (0.5, 1.0, 4.0):
        inst = make_instance(mu, [1.0])
        bf = brute_force_opt(inst, [0.0], [1.0], 2001)
        rep = bd.identical_f_opt_lower_bound(1, 0.0, mu, 1.0)
        assert rep.value == mu / (2 * (mu + 1))
        assert abs(rep.value - bf.objective) <= 1e-6
        assert solve_opt_quadratic(inst).objective == pytest.approx(rep.value, rel=1e-14)


def test_opt_sandwich_on_lower_bound_instance():
    inst = gen_omgd_lb(1.0, 2.0, 1.0)
    ps = bd.path_stats(inst)
    opt = solve_opt_quadratic(inst).objective
    assert bd.opt_lower_bound(ps, inst.mu).value <= opt <= bd.opt_trivial_upper_bound(ps).value
    assert opt <= 1.0 / 3.0


# --- competitive ratio ---------------------------------------------------------------------------


def test_cr_examples():
    assert bd.cr_upper_quadratic(1.0, 1.0).value == 120.0
    assert bd.cr_lower_omgd(1.0, 2.0).value == 2.125
    assert bd.cr_lower_universal(4.0).value == 4.0
    ps = bd.PathStats(pT=1.1, p2T=1.21, x1norm=1.1)
    lb = bd.cr_lower_linear(ps, 1.0).value
    assert lb == pytest.approx((2 * 1.1 + 12 / 1.1 + 3) / 8, rel=1e-14)
    assert lb == pytest.approx(2.0136, abs=1e-4)


def test_cr_gamma_reduces_to_interior_at_zero():
    assert bd.cr_upper_gamma(0.5, 2.0, 0.0).value == bd.cr_upper_quadratic(0.5, 2.0).value


def test_cr_bounds_listing_and_errors():
    ps = bd.PathStats(pT=1.0, p2T=1.0, x1norm=1.0)
    names = [r.name for r in bd.cr_bounds(ps, 1.0, 2.0)]
    assert names == ["cr-upper-quadratic", "cr-upper-comparator", "cr-lower-omgd", "cr-lower-universal",
                     "cr-upper-linear", "cr-lower-linear"]
    with pytest.raises(InvalidArgument):
        bd.cr_bounds(ps, 2.0, 1.0)
    with pytest.raises(InvalidArgument):
        bd.cr_upper_linear(ZERO, 1.0, 1.0)


# --- regret ----------------------------------------------------------------------------------------


def test_regret_examples():
    assert bd.regret_upper(ZERO, 1.0, 123.0).value == 0.0
    rho = (math.sqrt(5) - 1) / (math.sqrt(5) + 1)
    assert bd.zeta(1.0) == pytest.approx((1 - rho) ** 2 / 128, rel=1e-14)
    assert bd.zeta(1.0) == pytest.approx(0.002984, abs=5e-7)
    assert bd.regret_upper_vt2(1.0, 1.0, 0.1).value == pytest.approx(0.119, rel=1e-14)


def test_regret_upper_formula():
    ps = bd.PathStats(pT=2.0, p2T=1.0, x1norm=0.5)
    mu, G, D = 2.0, 3.0, 1.5
    k = 10 - mu / (2 * (mu + 4))
    assert bd.regret_upper(ps, mu, G).value == pytest.approx(2 * G * 2.5 + 5 * 0.25 + k * 1.0, rel=1e-15)
    assert bd.regret_upper_diameter(ps, mu, G, D).value == pytest.approx((2 * G + D * k) * 2.5, rel=1e-15)


def test_regret_bounds_require_inputs():
    ps = bd.PathStats(pT=1.0, p2T=1.0, x1norm=0.0)
    assert [r.name for r in bd.regret_bounds(ps, 1.0, 1.0, 1.0)] == ["regret-upper"]
    full = bd.regret_bounds(ps, 1.0, 1.0, 1.0, D=2.0, V_T=0.5)
    assert [r.name for r in full] == ["regret-upper", "regret-upper-diameter", "regret-lower-zeta",
                                      "regret-upper-vt2"]
    with pytest.raises(InvalidArgument):
        bd.regret_bounds(ps, 1.0, 1.0, 1.0, require=("regret-upper-diameter",))
    with pytest.raises(InvalidArgument):
        bd.regret_bounds(ps, 1.0, 1.0, 1.0, D=1.0, require=("regret-upper-vt2",))
    with pytest.raises(InvalidArgument):
        bd.regret_upper(ps, 1.0, -1.0)
