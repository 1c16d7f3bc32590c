"""Online algorithms that see only the previous round's gradients.

All gradient access goes through :class:`~ocoswitch.problem_model.InfoGate`,
so a solver that peeks at the current round raises instead of cheating.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import InvalidArgument, Unsupported
from .problem_model import InfoGate, Instance, Trajectory, minimizer

SolverKind = Literal["omgd", "omgd-nag", "chase-minimizer", "stay-put"]
NagVariant = Literal["standard", "printed"]

SOLVER_KINDS: tuple[str, ...] = ("omgd", "omgd-nag", "chase-minimizer", "stay-put")


def _check_moduli(mu: float, ell: float) -> None:
    if not mu > 0:
        raise InvalidArgument("mu must be positive")
    if ell < mu:
        raise InvalidArgument("ell must be at least mu")


def compute_k_gd(mu: float, ell: float) -> int:
    """Inner steps giving a 1/4 squared-distance contraction for gradient descent."""
    _check_moduli(mu, ell)
    return math.ceil((ell + mu) / (2.0 * mu) * math.log(4.0))


def compute_k_nag(mu: float, ell: float) -> int:
    """Inner steps giving a 1/4 squared-distance contraction for Nesterov momentum."""
    _check_moduli(mu, ell)
    q = ell / mu
    return math.ceil(math.sqrt(q) * math.log(4.0 * (q + 1.0)))


def nag_momentum(mu: float, ell: float) -> float:
    q = ell / mu
    return (math.sqrt(q) - 1.0) / (math.sqrt(q) + 1.0)


@dataclass(frozen=True)
class SolverSpec:
    """Solver kind with optional overrides for inner steps and step size.

    ``K`` and ``step`` default to the per-instance schedule and ``1/L``.
    """

    kind: SolverKind = "omgd"
    K: int | None = None
    step: float | None = None
    nag_variant: NagVariant = "standard"

    def __post_init__(self) -> None:
        if self.kind not in SOLVER_KINDS:
            raise InvalidArgument(f"unknown solver kind {self.kind!r}")
        if self.K is not None and self.K < 1:
            raise InvalidArgument("K must be at least 1")
        if self.step is not None and not self.step > 0:
            raise InvalidArgument("step must be positive")
        if self.nag_variant not in ("standard", "printed"):
            raise InvalidArgument(f"unknown NAG variant {self.nag_variant!r}")

    @property
    def name(self) -> str:
        if self.kind == "omgd-nag" and self.nag_variant != "standard":
            return f"{self.kind}-{self.nag_variant}"
        return self.kind

    def resolve(self, inst: Instance) -> tuple[int, float]:
        """Inner step count and step size for ``inst``."""
        ell = inst.ell
        step = 1.0 / ell if self.step is None else float(self.step)
        if step > 1.0 / ell * (1.0 + 1e-12):
            raise InvalidArgument("step must not exceed 1/L")
        if self.K is not None:
            return int(self.K), step
        if self.kind == "omgd-nag":
            return compute_k_nag(inst.mu, ell), step
        return compute_k_gd(inst.mu, ell), step


def run_omgd(inst: Instance, spec: SolverSpec | None = None) -> Trajectory:
    """x_1 = x_0, then K projected gradient steps on f_{t-1} from x_{t-1}."""
    spec = spec or SolverSpec("omgd")
    if spec.kind != "omgd":
        raise InvalidArgument("run_omgd needs an omgd spec")
    K, step = spec.resolve(inst)
    gate = InfoGate(keep_points=False)
    project = inst.feasible.projector()
    x = inst.x0.copy()
    actions = [x]
    for t in range(2, inst.T + 1):
        grad = gate.round_oracle(inst, t)
        z = x
        for _ in range(K):
            z = project(z - step * grad(z))
        x = z
        actions.append(x)
    return Trajectory.from_actions(inst, np.array(actions), spec.name)


def run_nag(inst: Instance, spec: SolverSpec | None = None) -> Trajectory:
    """Per round, Nesterov iterations on f_{t-1} from x_{t-1}; the action is y_{K+1}.

    Reaching ``y_{K+1}`` takes K + 1 gradient evaluations per round.
    """
    spec = spec or SolverSpec("omgd-nag")
    if spec.kind != "omgd-nag":
        raise InvalidArgument("run_nag needs an omgd-nag spec")
    if inst.feasible.kind != "all-space":
        raise Unsupported("the accelerated variant assumes an unconstrained domain")
    K, step = spec.resolve(inst)
    beta = nag_momentum(inst.mu, inst.ell)
    gate = InfoGate(keep_points=False)
    x = inst.x0.copy()
    actions = [x]
    for t in range(2, inst.T + 1):
        grad = gate.round_oracle(inst, t)
        y_prev = x
        xk = x
        for k in range(K + 1):
            y = xk - step * grad(xk)
            if k == K:
                break
            if spec.nag_variant == "standard":
                xk = (1.0 + beta) * y - beta * y_prev
            else:
                xk = (1.0 - beta) * y + beta * y_prev
            y_prev = y
        x = y
        actions.append(x)
    return Trajectory.from_actions(inst, np.array(actions), spec.name)


def run_baseline(inst: Instance, spec: SolverSpec) -> Trajectory:
    """chase-minimizer lands on x*_{t-1}; stay-put never leaves x_0."""
    if spec.kind == "stay-put":
        actions = np.repeat(inst.x0[None, :], inst.T, axis=0)
    elif spec.kind == "chase-minimizer":
        rows = [inst.x0.copy()]
        for t in range(2, inst.T + 1):
            rows.append(minimizer(inst.functions[t - 2], inst.feasible)[0])
        actions = np.array(rows)
    else:
        raise InvalidArgument(f"{spec.kind} is not a baseline")
    return Trajectory.from_actions(inst, actions, spec.name)


def run_solver(inst: Instance, spec: SolverSpec) -> Trajectory:
    if spec.kind == "omgd":
        return run_omgd(inst, spec)
    if spec.kind == "omgd-nag":
        return run_nag(inst, spec)
    return run_baseline(inst, spec)


def contraction_ratios(inst: Instance, traj: Trajectory) -> np.ndarray:
    """||x_t - x*_{t-1}||^2 / ||x_{t-1} - x*_{t-1}||^2 for t >= 2 (nan when 0/0)."""
    xs = traj.actions
    star = inst.minimizers
    num = np.sum((xs[1:] - star[:-1]) ** 2, axis=1)
    den = np.sum((xs[:-1] - star[:-1]) ** 2, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), np.where(num > 0, np.inf, np.nan))


def contraction_excess(inst: Instance, traj: Trajectory, factor: float = 0.25) -> np.ndarray:
    """||x_t - x*_{t-1}||^2 - factor ||x_{t-1} - x*_{t-1}||^2 for t >= 2."""
    xs = traj.actions
    star = inst.minimizers
    num = np.sum((xs[1:] - star[:-1]) ** 2, axis=1)
    den = np.sum((xs[:-1] - star[:-1]) ** 2, axis=1)
    return num - factor * den
