"""Feasible sets, hitting-cost models, instances and the delayed-gradient gate.

Rounds are numbered from 1 in every public API, matching the usual
``x_1 .. x_T`` notation; ``Instance.functions[t - 1]`` is ``f_t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Literal, Mapping, Sequence, TypeAlias

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InformationViolation, InvalidArgument, Unsupported

Vector: TypeAlias = NDArray[np.float64]
Switching = Literal["quadratic", "linear"]

INTERIOR_MARGIN = 1e-9
MEMBERSHIP_TOL = 1e-9


def as_vector(x: ArrayLike, dim: int | None = None) -> Vector:
    v = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if v.ndim != 1:
        raise InvalidArgument(f"expected a vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise InvalidArgument(f"dimension mismatch: expected {dim}, got {v.shape[0]}")
    return v


# ---------------------------------------------------------------------------
# Feasible sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FeasibleSet:
    """A closed convex set containing the origin.

    Build with :meth:`all_space`, :meth:`box` or :meth:`ball`.
    """

    kind: Literal["all-space", "box", "ball"]
    dim: int
    lower: Vector | None = None
    upper: Vector | None = None
    center: Vector | None = None
    radius: float | None = None

    @classmethod
    def all_space(cls, dim: int) -> FeasibleSet:
        if dim < 1:
            raise InvalidArgument("dimension must be at least 1")
        return cls("all-space", int(dim))

    @classmethod
    def box(cls, lower: ArrayLike, upper: ArrayLike) -> FeasibleSet:
        lo = as_vector(lower)
        hi = as_vector(upper, lo.shape[0])
        if np.any(lo > hi):
            raise InvalidArgument("box requires lower <= upper componentwise")
        if np.any(lo > 0) or np.any(hi < 0):
            raise InvalidArgument("box must contain the origin")
        lo.setflags(write=False)
        hi.setflags(write=False)
        return cls("box", lo.shape[0], lower=lo, upper=hi)

    @classmethod
    def ball(cls, center: ArrayLike, radius: float) -> FeasibleSet:
        m = as_vector(center)
        r = float(radius)
        if not r > 0:
            raise InvalidArgument("ball radius must be positive")
        if np.linalg.norm(m) > r:
            raise InvalidArgument("ball must contain the origin")
        m.setflags(write=False)
        return cls("ball", m.shape[0], center=m, radius=r)

    @property
    def bounded(self) -> bool:
        return self.kind != "all-space"

    def project(self, p: ArrayLike) -> Vector:
        p = as_vector(p, self.dim)
        if self.kind == "all-space":
            return p.copy()
        if self.kind == "box":
            return np.clip(p, self.lower, self.upper)
        offset = p - self.center
        dist = float(np.linalg.norm(offset))
        if dist <= self.radius:
            return p.copy()
        return self.center + offset * (self.radius / dist)

    def projector(self) -> Callable[[Vector], Vector]:
        """Projection map for trusted float vectors of length ``dim``; may return its argument."""
        if self.kind == "all-space":
            return lambda p: p
        if self.kind == "box":
            lo, hi = self.lower, self.upper
            return lambda p: np.clip(p, lo, hi)
        center, radius = self.center, self.radius

        def proj(p: Vector) -> Vector:
            offset = p - center
            dist = math.sqrt(float(np.dot(offset, offset)))
            return p if dist <= radius else center + offset * (radius / dist)

        return proj

    def contains(self, x: ArrayLike, tol: float = MEMBERSHIP_TOL) -> bool:
        x = as_vector(x, self.dim)
        if self.kind == "all-space":
            return bool(np.all(np.isfinite(x)))
        if self.kind == "box":
            return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))
        return bool(np.linalg.norm(x - self.center) <= self.radius + tol)

    def contains_rows(self, X: NDArray[np.float64], tol: float = MEMBERSHIP_TOL) -> NDArray[np.bool_]:
        """Row-wise ``contains`` for an (n, d) array."""
        if self.kind == "all-space":
            return np.all(np.isfinite(X), axis=1)
        if self.kind == "box":
            return np.all((X >= self.lower - tol) & (X <= self.upper + tol), axis=1)
        return np.linalg.norm(X - self.center, axis=1) <= self.radius + tol

    def boundary_distance(self, x: ArrayLike) -> float:
        """Distance from a member point to the boundary (inf for all-space)."""
        x = as_vector(x, self.dim)
        if self.kind == "all-space":
            return math.inf
        if self.kind == "box":
            return float(min(np.min(x - self.lower), np.min(self.upper - x)))
        return float(self.radius - np.linalg.norm(x - self.center))

    def diameter(self) -> float:
        if self.kind == "all-space":
            return math.inf
        if self.kind == "box":
            return float(np.linalg.norm(self.upper - self.lower))
        return 2.0 * float(self.radius)

    def farthest_offsets(self, c: Vector) -> Vector:
        """Componentwise largest |x_i - c_i| over a box."""
        if self.kind != "box":
            raise Unsupported("componentwise extremes are defined for boxes only")
        return np.maximum(np.abs(self.lower - c), np.abs(self.upper - c))

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "all-space":
            return {"kind": "all-space", "dim": self.dim}
        if self.kind == "box":
            return {"kind": "box", "lower": self.lower.tolist(), "upper": self.upper.tolist()}
        return {"kind": "ball", "center": self.center.tolist(), "radius": self.radius}

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any], dim: int | None = None) -> FeasibleSet:
        kind = doc.get("kind", "all-space")
        if kind == "all-space":
            d = doc.get("dim", dim)
            if d is None:
                raise InvalidArgument("all-space set needs a dimension")
            return cls.all_space(int(d))
        if kind == "box":
            return cls.box(doc["lower"], doc["upper"])
        if kind == "ball":
            return cls.ball(doc["center"], doc["radius"])
        raise InvalidArgument(f"unknown set kind {kind!r}")


def project(s: FeasibleSet, p: ArrayLike) -> Vector:
    """Euclidean projection of ``p`` onto ``s``."""
    return s.project(p)


# ---------------------------------------------------------------------------
# Hitting-cost models
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FunctionModel:
    """A smooth strongly convex hitting cost with certified (mu, ell).

    Quadratic kinds store curvature ``a`` as a length-d vector; the
    isotropic kind keeps all entries equal.
    """

    kind: Literal["isotropic-quadratic", "diagonal-quadratic", "external-oracle"]
    dim: int
    mu: float
    ell: float
    a: Vector | None = None
    c: Vector | None = None
    value_fn: Callable[[Vector], float] | None = None
    grad_fn: Callable[[Vector], Vector] | None = None
    known_minimizer: Vector | None = None

    @classmethod
    def isotropic(cls, a: float, c: ArrayLike) -> FunctionModel:
        a = float(a)
        if not a > 0:
            raise InvalidArgument("curvature must be positive")
        cv = as_vector(c).copy()
        cv.setflags(write=False)
        av = np.full(cv.shape[0], a)
        av.setflags(write=False)
        return cls("isotropic-quadratic", cv.shape[0], a, a, a=av, c=cv)

    @classmethod
    def diagonal(cls, a: ArrayLike, c: ArrayLike) -> FunctionModel:
        av = as_vector(a).copy()
        cv = as_vector(c, av.shape[0]).copy()
        if np.any(av <= 0):
            raise InvalidArgument("curvatures must be positive")
        av.setflags(write=False)
        cv.setflags(write=False)
        return cls("diagonal-quadratic", av.shape[0], float(av.min()), float(av.max()), a=av, c=cv)

    @classmethod
    def oracle(
        cls,
        value: Callable[[Vector], float],
        grad: Callable[[Vector], Vector],
        mu: float,
        ell: float,
        dim: int,
        minimizer: ArrayLike | None = None,
    ) -> FunctionModel:
        if not 0 < mu <= ell:
            raise InvalidArgument("oracle needs 0 < mu <= ell")
        xm = None if minimizer is None else as_vector(minimizer, dim)
        return cls("external-oracle", int(dim), float(mu), float(ell),
                   value_fn=value, grad_fn=grad, known_minimizer=xm)

    @property
    def is_quadratic(self) -> bool:
        return self.kind != "external-oracle"

    def value(self, x: ArrayLike) -> float:
        x = as_vector(x, self.dim)
        if self.is_quadratic:
            r = x - self.c
            return 0.5 * float(np.dot(self.a * r, r))
        return float(self.value_fn(x))

    def values(self, X: NDArray[np.float64]) -> NDArray[np.float64]:
        """Row-wise ``value`` for an (n, d) array."""
        if self.is_quadratic:
            R = X - self.c
            return 0.5 * np.einsum("ij,ij->i", R * self.a, R)
        return np.array([self.value(x) for x in X], dtype=np.float64)

    def grad(self, x: ArrayLike) -> Vector:
        x = as_vector(x, self.dim)
        if self.is_quadratic:
            return self.a * (x - self.c)
        return as_vector(self.grad_fn(x), self.dim)

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "isotropic-quadratic":
            return {"kind": "isotropic", "a": self.mu, "c": self.c.tolist()}
        if self.kind == "diagonal-quadratic":
            return {"kind": "diagonal", "a": self.a.tolist(), "c": self.c.tolist()}
        raise Unsupported("external oracles cannot be serialized")

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> FunctionModel:
        kind = doc.get("kind", "isotropic")
        if kind in ("isotropic", "isotropic-quadratic"):
            return cls.isotropic(doc["a"], doc["c"])
        if kind in ("diagonal", "diagonal-quadratic"):
            return cls.diagonal(doc["a"], doc["c"])
        raise InvalidArgument(f"unknown function kind {kind!r}")


def evaluate(f: FunctionModel, x: ArrayLike) -> float:
    return f.value(x)


def grad(f: FunctionModel, x: ArrayLike) -> Vector:
    return f.grad(x)


def _diag_quadratic_over_ball(a: Vector, c: Vector, m: Vector, r: float) -> Vector:
    # KKT: y_i = a_i c'_i / (a_i + lam), lam >= 0 chosen so that ||y|| = r.
    cp = c - m
    if np.linalg.norm(cp) <= r:
        return c.copy()
    lo, hi = 0.0, float(np.max(a)) * (np.linalg.norm(cp) / r) + 1.0
    for _ in range(200):
        lam = 0.5 * (lo + hi)
        if np.linalg.norm(a * cp / (a + lam)) > r:
            lo = lam
        else:
            hi = lam
    y = a * cp / (a + hi)
    return m + y * (r / np.linalg.norm(y))


def minimizer(f: FunctionModel, s: FeasibleSet) -> tuple[Vector, bool]:
    """Constrained minimizer of ``f`` over ``s`` and whether it is interior."""
    if f.dim != s.dim:
        raise InvalidArgument("function and set dimensions differ")
    if f.kind == "external-oracle":
        if f.known_minimizer is not None:
            x = f.known_minimizer.copy()
        elif s.kind == "all-space":
            raise Unsupported("external oracle needs a supplied minimizer")
        else:
            raise Unsupported("external oracle over a constrained set needs a supplied minimizer")
    elif s.kind == "all-space":
        x = f.c.copy()
    elif f.kind == "isotropic-quadratic" or s.kind == "box":
        # Box clamping is exact for separable quadratics.
        x = s.project(f.c)
    else:
        x = _diag_quadratic_over_ball(f.a, f.c, s.center, s.radius)
    return x, bool(s.boundary_distance(x) > INTERIOR_MARGIN)


# ---------------------------------------------------------------------------
# Instances and trajectories
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Instance:
    """Horizon, feasible set, start point, hitting costs and switching kind."""

    feasible: FeasibleSet
    x0: Vector
    functions: tuple[FunctionModel, ...]
    switching: Switching = "quadratic"
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.functions:
            raise InvalidArgument("an instance needs at least one round")
        x0 = as_vector(self.x0, self.feasible.dim).copy()
        x0.setflags(write=False)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "functions", tuple(self.functions))
        if self.switching not in ("quadratic", "linear"):
            raise InvalidArgument(f"unknown switching kind {self.switching!r}")
        for f in self.functions:
            if f.dim != self.feasible.dim:
                raise InvalidArgument("function dimension differs from set dimension")
        if not self.feasible.contains(x0):
            raise InvalidArgument("x0 must lie in the feasible set")

    @property
    def T(self) -> int:
        return len(self.functions)

    @property
    def d(self) -> int:
        return self.feasible.dim

    @property
    def mu(self) -> float:
        return min(f.mu for f in self.functions)

    @property
    def ell(self) -> float:
        return max(f.ell for f in self.functions)

    @property
    def all_quadratic(self) -> bool:
        return all(f.is_quadratic for f in self.functions)

    @cached_property
    def _minimizers(self) -> tuple[NDArray[np.float64], NDArray[np.bool_]]:
        pts, flags = zip(*(minimizer(f, self.feasible) for f in self.functions))
        xs = np.array(pts)
        fl = np.array(flags)
        xs.setflags(write=False)
        fl.setflags(write=False)
        return xs, fl

    @property
    def minimizers(self) -> NDArray[np.float64]:
        """Array of shape (T, d); row t-1 is x_t*."""
        return self._minimizers[0]

    @property
    def interior(self) -> bool:
        return bool(np.all(self._minimizers[1]))

    def curvature(self) -> NDArray[np.float64]:
        """Array (T, d) of quadratic curvatures."""
        if not self.all_quadratic:
            raise Unsupported("curvatures exist for quadratic models only")
        return np.array([f.a for f in self.functions])

    def centers(self) -> NDArray[np.float64]:
        if not self.all_quadratic:
            raise Unsupported("centers exist for quadratic models only")
        return np.array([f.c for f in self.functions])

    def with_switching(self, switching: Switching) -> Instance:
        return Instance(self.feasible, self.x0, self.functions, switching, dict(self.meta))

    def with_set(self, feasible: FeasibleSet) -> Instance:
        return Instance(feasible, self.x0, self.functions, self.switching, dict(self.meta))

    def to_dict(self) -> dict[str, Any]:
        return {
            "T": self.T,
            "d": self.d,
            "set": self.feasible.to_dict(),
            "x0": self.x0.tolist(),
            "switching": self.switching,
            "functions": [f.to_dict() for f in self.functions],
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> Instance:
        funcs = tuple(FunctionModel.from_dict(f) for f in doc["functions"])
        if not funcs:
            raise InvalidArgument("an instance needs at least one round")
        d = int(doc.get("d", funcs[0].dim))
        feasible = FeasibleSet.from_dict(doc.get("set", {"kind": "all-space"}), dim=d)
        x0 = doc.get("x0", [0.0] * d)
        inst = cls(feasible, as_vector(x0), funcs, doc.get("switching", "quadratic"))
        if "T" in doc and int(doc["T"]) != inst.T:
            raise InvalidArgument("T does not match the number of functions")
        return inst


def switching_cost(delta: NDArray[np.float64], kind: Switching) -> NDArray[np.float64]:
    """Per-row switching cost of move vectors ``delta`` (shape (T, d))."""
    if kind == "quadratic":
        return 0.5 * np.einsum("ij,ij->i", delta, delta)
    return np.linalg.norm(delta, axis=1)


def trajectory_costs(inst: Instance, actions: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Per-round hitting and switching costs, including the t=1 move from x0."""
    xs = np.asarray(actions, dtype=np.float64)
    if xs.ndim != 2 or xs.shape != (inst.T, inst.d):
        raise InvalidArgument(f"actions must have shape {(inst.T, inst.d)}, got {xs.shape}")
    hit = np.array([f.value(x) for f, x in zip(inst.functions, xs)])
    prev = np.vstack([inst.x0[None, :], xs[:-1]])
    return hit, switching_cost(xs - prev, inst.switching)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Actions x_1..x_T with per-round hitting and switching costs."""

    actions: NDArray[np.float64]
    hitting: NDArray[np.float64]
    switching: NDArray[np.float64]
    algorithm: str = ""

    @classmethod
    def from_actions(cls, inst: Instance, actions: ArrayLike, algorithm: str = "") -> Trajectory:
        xs = np.array(actions, dtype=np.float64)
        hit, sw = trajectory_costs(inst, xs)
        for arr in (xs, hit, sw):
            arr.setflags(write=False)
        return cls(xs, hit, sw, algorithm)

    @property
    def T(self) -> int:
        return self.actions.shape[0]

    @property
    def hitting_total(self) -> float:
        return float(self.hitting.sum())

    @property
    def switching_total(self) -> float:
        return float(self.switching.sum())

    @property
    def total(self) -> float:
        return self.hitting_total + self.switching_total

    def consistent_with(self, inst: Instance) -> bool:
        """Actions feasible and stored costs equal their recomputation."""
        if self.actions.shape != (inst.T, inst.d):
            return False
        if not all(inst.feasible.contains(x) for x in self.actions):
            return False
        hit, sw = trajectory_costs(inst, self.actions)
        return bool(np.array_equal(hit, self.hitting) and np.array_equal(sw, self.switching))


# ---------------------------------------------------------------------------
# Information gate
# ---------------------------------------------------------------------------


@dataclass
class InfoGate:
    """Serves only gradients of f_{t-1} during round t and counts every query.

    ``log`` keeps the queried points only when ``keep_points`` is set.
    """

    round: int = 0
    keep_points: bool = True
    log: list[tuple[int, Vector]] = field(default_factory=list)
    queries: dict[int, int] = field(default_factory=dict)

    def _admit(self, inst: Instance, t: int, source: int | None) -> int:
        source = t - 1 if source is None else source
        if t < self.round:
            raise InformationViolation(f"round {t} requested after round {self.round}")
        if t < 2:
            raise InformationViolation("no past function exists in round 1")
        if source != t - 1:
            raise InformationViolation(f"round {t} may only query f_{t - 1}, not f_{source}")
        if t > inst.T:
            raise InformationViolation(f"round {t} exceeds horizon {inst.T}")
        self.round = t
        return source

    def _record(self, t: int, x: Vector) -> None:
        self.queries[t] = self.queries.get(t, 0) + 1
        if self.keep_points:
            self.log.append((t, x.copy()))

    def query(self, inst: Instance, t: int, x: ArrayLike, source: int | None = None) -> Vector:
        source = self._admit(inst, t, source)
        x = as_vector(x, inst.d)
        self._record(t, x)
        return inst.functions[source - 1].grad(x)

    def round_oracle(self, inst: Instance, t: int, source: int | None = None) -> Callable[[Vector], Vector]:
        """Gradient map of f_{t-1} that expires once the gate moves past round ``t``.

        The returned map trusts its argument to be a float vector of length d.
        """
        f = inst.functions[self._admit(inst, t, source) - 1]
        if f.is_quadratic:
            a, c = f.a, f.c

            def g(x: Vector) -> Vector:
                if self.round != t:
                    raise InformationViolation(f"oracle for round {t} used in round {self.round}")
                self._record(t, x)
                return a * (x - c)
        else:

            def g(x: Vector) -> Vector:
                if self.round != t:
                    raise InformationViolation(f"oracle for round {t} used in round {self.round}")
                self._record(t, x)
                return f.grad(x)

        return g


def gated_grad(gate: InfoGate, inst: Instance, t: int, x: ArrayLike, source: int | None = None) -> Vector:
    """Gradient of f_{t-1} at ``x`` for use during round ``t``."""
    return gate.query(inst, t, x, source)
