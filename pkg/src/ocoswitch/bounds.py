"""Closed-form bounds on online cost, offline cost, competitive ratio and regret.

Every function returns data; no inequality is asserted here. Quantities:

* ``pT``: path length of the per-round minimizers, summed from t = 2;
* ``p2T``: squared path length, summed from t = 2;
* ``x1norm``: distance from the start point to the first minimizer, which
  is ``||x_1*||`` under the usual ``x_0 = 0`` convention;
* ``sumFstar``: total hitting cost at the minimizers;
* ``gradSq``: total squared gradient norm at the minimizers (0 when
  every minimizer is interior).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Literal

import numpy as np

from .errors import InvalidArgument
from .problem_model import Instance, Switching
from .spectral import rho_of

BoundKind = Literal[
    "upper-on-cost",
    "lower-on-cost",
    "lower-on-opt",
    "upper-on-opt",
    "upper-on-cr",
    "lower-on-cr",
    "upper-on-regret",
    "lower-on-regret",
]


@dataclass(frozen=True)
class PathStats:
    pT: float
    p2T: float
    x1norm: float
    sumFstar: float = 0.0
    gradSq: float = 0.0

    @property
    def x1sq(self) -> float:
        return self.x1norm**2

    def to_dict(self) -> dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class BoundReport:
    name: str
    value: float
    kind: BoundKind
    inputs: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "value": self.value, "kind": self.kind, "inputs": dict(self.inputs)}


def path_stats(inst: Instance) -> PathStats:
    star = inst.minimizers
    steps = np.linalg.norm(np.diff(star, axis=0), axis=1)
    grads = [f.grad(x) for f, x in zip(inst.functions, star)]
    return PathStats(
        pT=float(steps.sum()),
        p2T=float(np.sum(steps**2)),
        x1norm=float(np.linalg.norm(star[0] - inst.x0)),
        sumFstar=float(sum(f.value(x) for f, x in zip(inst.functions, star))),
        gradSq=float(sum(float(g @ g) for g in grads)),
    )


# ---------------------------------------------------------------------------
# Online cost of OMGD
# ---------------------------------------------------------------------------


def sum_dist_sq_bound(ps: PathStats) -> BoundReport:
    """sum_t ||x_t - x_t*||^2 <= 2||x_1 - x_1*||^2 + 4 P2."""
    return BoundReport("sum-dist-sq", 2.0 * ps.x1sq + 4.0 * ps.p2T, "upper-on-cost")


def switching_bound(ps: PathStats, switching: Switching) -> BoundReport:
    if switching == "quadratic":
        return BoundReport("switching-total", 5.0 * ps.x1sq + 10.0 * ps.p2T, "upper-on-cost",
                           {"switching": switching})
    return BoundReport("switching-total", 3.0 * ps.x1norm + 3.0 * ps.pT, "upper-on-cost",
                       {"switching": switching})


def optimal_alpha(ps: PathStats) -> float:
    """alpha minimising gradSq/(2 alpha) + alpha (x1^2 + 2 P2); 0 when gradSq = 0."""
    if ps.gradSq == 0.0:
        return 0.0
    s = ps.x1sq + 2.0 * ps.p2T
    if s == 0.0:
        raise InvalidArgument("alpha is unbounded when the path terms vanish")
    return math.sqrt(ps.gradSq / (2.0 * s))


def _alpha_terms(ps: PathStats, alpha: float | None) -> tuple[float, float]:
    if alpha is None:
        alpha = optimal_alpha(ps)
    if alpha < 0 or (alpha == 0 and ps.gradSq > 0):
        raise InvalidArgument("alpha must be positive when gradSq > 0")
    grad_term = 0.0 if ps.gradSq == 0 else ps.gradSq / (2.0 * alpha)
    return alpha, grad_term


def hitting_bound(ps: PathStats, ell: float, alpha: float | None = None) -> BoundReport:
    """sumFstar + gradSq/(2 alpha) + (L + alpha)(x1^2 + 2 P2)."""
    alpha, grad_term = _alpha_terms(ps, alpha)
    value = ps.sumFstar + grad_term + (ell + alpha) * (ps.x1sq + 2.0 * ps.p2T)
    return BoundReport("hitting-total", value, "upper-on-cost", {"L": ell, "alpha": alpha})


def omgd_total_cost_bound(
    ps: PathStats, mu: float, ell: float, alpha: float | None = None, switching: Switching = "quadratic"
) -> BoundReport:
    """Upper bound on the total cost of OMGD; ``alpha=None`` picks the best alpha."""
    alpha, grad_term = _alpha_terms(ps, alpha)
    s = ps.x1sq + 2.0 * ps.p2T
    if switching == "quadratic":
        value = ps.sumFstar + grad_term + (ell + alpha + 5.0) * s
    else:
        value = ps.sumFstar + grad_term + (ell + alpha) * s + 3.0 * ps.x1norm + 3.0 * ps.pT
    return BoundReport("total-cost", value, "upper-on-cost",
                       {"mu": mu, "L": ell, "alpha": alpha, "switching": switching})


def gamma_of(ps: PathStats) -> float:
    """gamma with gradSq = gamma P2."""
    if ps.gradSq == 0.0:
        return 0.0
    if ps.p2T == 0.0:
        raise InvalidArgument("gamma is undefined when P2 = 0 but gradSq > 0")
    return ps.gradSq / ps.p2T


def gamma_cost_bound(ps: PathStats, ell: float, gamma: float | None = None) -> BoundReport:
    """Quadratic-switching cost bound for boundary minimizers at alpha = sqrt(gamma)/2."""
    gamma = gamma_of(ps) if gamma is None else gamma
    value = ps.sumFstar + (2.0 * ell + 2.0 * math.sqrt(gamma) + 10.0) * (ps.x1sq + ps.p2T)
    return BoundReport("total-cost-gamma", value, "upper-on-cost",
                       {"L": ell, "gamma": gamma, "alpha": math.sqrt(gamma) / 2.0})


# ---------------------------------------------------------------------------
# Offline cost
# ---------------------------------------------------------------------------


def opt_lower_bound(ps: PathStats, mu: float, switching: Switching = "quadratic") -> BoundReport:
    if not mu > 0:
        raise InvalidArgument("mu must be positive")
    if switching == "quadratic":
        value = ps.sumFstar + mu / (2.0 * (mu + 4.0)) * (ps.p2T + ps.x1sq)
    else:
        # Reduction constant 2U = pT + x1norm.
        value = ps.sumFstar + 2.0 * mu * (ps.p2T + ps.x1sq) / (mu * (ps.pT + ps.x1norm) + 8.0)
    return BoundReport("opt-lower", value, "lower-on-opt", {"mu": mu, "switching": switching})


def opt_trivial_upper_bound(ps: PathStats, switching: Switching = "quadratic") -> BoundReport:
    """Cost of playing x_t = x_t* from the start point."""
    if switching == "quadratic":
        value = ps.sumFstar + 0.5 * (ps.p2T + ps.x1sq)
    else:
        value = ps.sumFstar + ps.pT + ps.x1norm
    return BoundReport("opt-upper-trivial", value, "upper-on-opt", {"switching": switching})


def identical_f_opt_lower_bound(T: int, f_at_min: float, mu: float, xstar_norm: float) -> BoundReport:
    """C_OPT >= T f(x*) + mu/(2(mu+1)) ||x*||^2 when every round repeats one f."""
    value = T * f_at_min + mu / (2.0 * (mu + 1.0)) * xstar_norm**2
    return BoundReport("opt-lower-identical", value, "lower-on-opt", {"mu": mu, "T": T})


# ---------------------------------------------------------------------------
# Competitive ratio
# ---------------------------------------------------------------------------


def cr_upper_quadratic(mu: float, ell: float) -> BoundReport:
    return BoundReport("cr-upper-quadratic", 4.0 * (ell + 5.0) + 16.0 * (ell + 5.0) / mu,
                       "upper-on-cr", {"mu": mu, "L": ell})


def cr_upper_gamma(mu: float, ell: float, gamma: float) -> BoundReport:
    k = ell + math.sqrt(gamma) + 5.0
    return BoundReport("cr-upper-quadratic-gamma", 4.0 * k + 16.0 * k / mu, "upper-on-cr",
                       {"mu": mu, "L": ell, "gamma": gamma})


def cr_upper_comparator(mu: float, ell: float) -> BoundReport:
    return BoundReport("cr-upper-comparator", 4.0 * (ell + 5.0) * (1.0 + 4.0 / mu), "upper-on-cr",
                       {"mu": mu, "L": ell})


def _linear_ratios(ps: PathStats) -> tuple[float, float]:
    den = ps.p2T + ps.x1sq
    if den <= 0:
        raise InvalidArgument("linear bounds need P2 + ||x1*||^2 > 0")
    s = ps.pT + ps.x1norm
    return s, den


def cr_upper_linear(ps: PathStats, mu: float, ell: float) -> BoundReport:
    s, den = _linear_ratios(ps)
    value = ell * s + 1.5 * s * s / den + 8.0 * ell / mu + (12.0 / mu) * s / den
    return BoundReport("cr-upper-linear", value, "upper-on-cr", {"mu": mu, "L": ell})


def cr_lower_linear(ps: PathStats, mu: float) -> BoundReport:
    s, den = _linear_ratios(ps)
    value = (mu * s + 1.5 * s * s / den + (12.0 / mu) * s / den) / 8.0
    return BoundReport("cr-lower-linear", value, "lower-on-cr", {"mu": mu})


def cr_lower_omgd(mu: float, ell: float) -> BoundReport:
    return BoundReport("cr-lower-omgd", 1.0 + (ell + 1.0) / (4.0 * mu) + (ell + 1.0) / 8.0,
                       "lower-on-cr", {"mu": mu, "L": ell})


def cr_lower_universal(ell: float) -> BoundReport:
    return BoundReport("cr-lower-universal", float(ell), "lower-on-cr", {"L": ell})


def cr_bounds(ps: PathStats, mu: float, ell: float) -> list[BoundReport]:
    if not mu > 0 or ell < mu:
        raise InvalidArgument("need 0 < mu <= L")
    out = [cr_upper_quadratic(mu, ell), cr_upper_comparator(mu, ell), cr_lower_omgd(mu, ell),
           cr_lower_universal(ell)]
    if ps.gradSq > 0:
        out.append(cr_upper_gamma(mu, ell, gamma_of(ps)))
    if ps.p2T + ps.x1sq > 0:
        out += [cr_upper_linear(ps, mu, ell), cr_lower_linear(ps, mu)]
    return out


# ---------------------------------------------------------------------------
# Dynamic regret
# ---------------------------------------------------------------------------


def zeta(mu: float) -> float:
    rho = rho_of(mu)
    return mu**3 * (1.0 - rho) ** 2 / (32.0 * (mu + 1.0) ** 2)


def regret_upper(ps: PathStats, mu: float, G: float) -> BoundReport:
    if G < 0:
        raise InvalidArgument("G must be nonnegative")
    value = (2.0 * G * (ps.x1norm + ps.pT) + 5.0 * ps.x1sq
             + (10.0 - mu / (2.0 * (mu + 4.0))) * ps.p2T)
    return BoundReport("regret-upper", value, "upper-on-regret", {"mu": mu, "G": G})


def regret_upper_diameter(ps: PathStats, mu: float, G: float, D: float) -> BoundReport:
    value = (2.0 * G + D * (10.0 - mu / (2.0 * (mu + 4.0)))) * (ps.x1norm + ps.pT)
    return BoundReport("regret-upper-diameter", value, "upper-on-regret", {"mu": mu, "G": G, "D": D})


def regret_lower_zeta(mu: float, D: float, V_T: float) -> BoundReport:
    return BoundReport("regret-lower-zeta", zeta(mu) * D * V_T, "lower-on-regret",
                       {"mu": mu, "D": D, "V_T": V_T})


def regret_upper_vt2(mu: float, ell: float, V_T: float) -> BoundReport:
    value = (2.0 * ell + 10.0 - mu / (2.0 * mu + 8.0)) * V_T**2
    return BoundReport("regret-upper-vt2", value, "upper-on-regret", {"mu": mu, "L": ell, "V_T": V_T})


def regret_bounds(
    ps: PathStats,
    mu: float,
    ell: float,
    G: float,
    D: float | None = None,
    V_T: float | None = None,
    require: tuple[str, ...] = (),
) -> list[BoundReport]:
    """Regret bounds; ``require`` names formulas whose inputs must be present."""
    needs_d = {"regret-upper-diameter", "regret-lower-zeta"}
    needs_v = {"regret-lower-zeta", "regret-upper-vt2"}
    for name in require:
        if name in needs_d and D is None:
            raise InvalidArgument(f"{name} needs the diameter D")
        if name in needs_v and V_T is None:
            raise InvalidArgument(f"{name} needs V_T")
    out = [regret_upper(ps, mu, G)]
    if D is not None:
        out.append(regret_upper_diameter(ps, mu, G, D))
        if V_T is not None:
            out.append(regret_lower_zeta(mu, D, V_T))
    if V_T is not None:
        out.append(regret_upper_vt2(mu, ell, V_T))
    return out
