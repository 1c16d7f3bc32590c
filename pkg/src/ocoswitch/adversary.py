"""Adversarial instances used by the lower-bound constructions.

Each generator returns an :class:`Instance` whose ``meta`` records the
recipe name and parameters, so the harness can attach recipe-specific
checks. All instances start from x_0 = 0 over the whole space.

* ``omgd-lb``: f_1 = (mu/2)||x - theta||^2, f_2 = (L/2)||x||^2.
* ``slow-mu`` / ``slow-L``: T copies of (x - 1)^2 or (L/2)(x - 1)^2.
* ``preliminary-L``: one round of (L/2)(x - 1)^2; any online play is x_1 = 0.
* ``modified-L-sqrtmu``: T' rounds of (mu/2)x^2, then (L/2)(x - 1)^2.
* ``linear-lb``: (mu/2)(x - theta)^2 then (mu/2)x^2 under linear switching,
  with 1/mu < theta <= (sqrt(129) - 9)/(2 mu).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np
from numpy.typing import ArrayLike

from .errors import InvalidArgument
from .problem_model import FeasibleSet, FunctionModel, Instance, as_vector

LINEAR_LB_CONSTANT = (math.sqrt(129.0) - 9.0) / 2.0
THETA_MARGIN = 1e-12


def _instance(funcs: list[FunctionModel], d: int, switching: str, name: str, params: dict) -> Instance:
    return Instance(FeasibleSet.all_space(d), np.zeros(d), tuple(funcs), switching,
                    {"recipe": name, "params": params})


def _theta_vector(theta: float | ArrayLike, d: int) -> np.ndarray:
    th = np.asarray(theta, dtype=np.float64)
    return np.full(d, float(th)) / math.sqrt(d) if th.ndim == 0 else as_vector(th, d)


def gen_omgd_lb(mu: float, ell: float, theta: float | ArrayLike, d: int = 1) -> Instance:
    """Two rounds whose minimizers jump from theta to 0.

    A scalar ``theta`` is spread evenly so that ``||theta||`` equals it.
    """
    if not 0 < mu <= ell:
        raise InvalidArgument("need 0 < mu <= L")
    th = _theta_vector(theta, d)
    if not np.any(th != 0):
        raise InvalidArgument("theta must be nonzero")
    funcs = [FunctionModel.isotropic(mu, th), FunctionModel.isotropic(ell, np.zeros(d))]
    return _instance(funcs, d, "quadratic", "omgd-lb",
                     {"mu": mu, "ell": ell, "theta": float(np.linalg.norm(th)), "d": d})


def gen_slow(mode: str, value: float = 1.0, T: int = 10) -> Instance:
    """Constant rounds: (x - 1)^2 in mu-mode, (L/2)(x - 1)^2 with L = ``value`` in L-mode."""
    if T < 1:
        raise InvalidArgument("T must be at least 1")
    if mode == "mu":
        a = 2.0
    elif mode == "L":
        if not value > 0:
            raise InvalidArgument("L must be positive")
        a = float(value)
    else:
        raise InvalidArgument(f"unknown slow mode {mode!r}")
    funcs = [FunctionModel.isotropic(a, [1.0]) for _ in range(T)]
    return _instance(funcs, 1, "quadratic", f"slow-{mode}", {"mode": mode, "value": value, "T": T})


def gen_preliminary(ell: float) -> Instance:
    if not ell > 0:
        raise InvalidArgument("L must be positive")
    return _instance([FunctionModel.isotropic(ell, [1.0])], 1, "quadratic", "preliminary-L", {"ell": ell})


def gen_modified(mu: float, ell: float, Tprime: int) -> Instance:
    if not 0 < mu <= ell:
        raise InvalidArgument("need 0 < mu <= L")
    if Tprime < 1:
        raise InvalidArgument("T' must be at least 1")
    funcs = [FunctionModel.isotropic(mu, [0.0]) for _ in range(Tprime)]
    funcs.append(FunctionModel.isotropic(ell, [1.0]))
    return _instance(funcs, 1, "quadratic", "modified-L-sqrtmu", {"mu": mu, "ell": ell, "Tprime": Tprime})


def linear_lb_theta_range(mu: float) -> tuple[float, float]:
    """Open lower and closed upper end of the admissible theta interval."""
    if not mu > 0:
        raise InvalidArgument("mu must be positive")
    return 1.0 / mu, LINEAR_LB_CONSTANT / mu


def gen_linear_lb(mu: float, theta: float) -> Instance:
    lo, hi = linear_lb_theta_range(mu)
    if not (theta > lo and theta <= hi + THETA_MARGIN):
        raise InvalidArgument(f"theta must lie in ({lo}, {hi}]")
    funcs = [FunctionModel.isotropic(mu, [theta]), FunctionModel.isotropic(mu, [0.0])]
    return _instance(funcs, 1, "linear", "linear-lb", {"mu": mu, "theta": theta})


@dataclass(frozen=True)
class AdversaryRecipe:
    name: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def build(self) -> Instance:
        return build_recipe(self.name, dict(self.params))


_BUILDERS: dict[str, Callable[..., Instance]] = {
    "omgd-lb": lambda mu, ell, theta, d=1: gen_omgd_lb(mu, ell, theta, int(d)),
    "slow-mu": lambda T=10, **_: gen_slow("mu", 1.0, int(T)),
    "slow-L": lambda ell=1.0, T=10: gen_slow("L", ell, int(T)),
    "preliminary-L": lambda ell: gen_preliminary(ell),
    "modified-L-sqrtmu": lambda mu, ell, Tprime: gen_modified(mu, ell, int(Tprime)),
    "linear-lb": lambda mu, theta: gen_linear_lb(mu, theta),
}

RECIPES: tuple[str, ...] = tuple(_BUILDERS)


def build_recipe(name: str, params: Mapping[str, Any]) -> Instance:
    if name not in _BUILDERS:
        raise InvalidArgument(f"unknown recipe {name!r}; known: {', '.join(RECIPES)}")
    try:
        return _BUILDERS[name](**params)
    except TypeError as exc:
        raise InvalidArgument(f"bad parameters for {name}: {exc}") from exc
