"""Clairvoyant offline optimum C_OPT.

* quadratic switching with quadratic hitting costs: exact per-coordinate
  tridiagonal solve of the stationarity system;
* linear switching: projected subgradient descent on the stacked
  trajectory, then a cyclic exact block-minimisation polish, certified by
  a Lagrangian dual bound;
* brute force over a grid of trajectories, as an independent oracle;
* the two-round closed form.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import ConstrainedCaseUnsupported, InvalidArgument, Unsupported
from .problem_model import FeasibleSet, FunctionModel, Instance, Trajectory, as_vector
from .tridiag import thomas_solve, tridiag_matvec

Method = Literal["tridiagonal", "subgradient", "brute-force", "closed-form-T2"]

DEFAULT_BUDGET = 10**8
STATIONARITY_TOL = 1e-10
LINEAR_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class OptSolution:
    """An offline trajectory, its cost, how it was found and how well.

    ``residual`` is the relative stationarity residual (tridiagonal), the
    duality gap (subgradient) or the grid spacing (brute force).
    ``lower_bound`` is a certified lower bound on C_OPT where one exists.
    """

    trajectory: Trajectory
    objective: float
    method: Method
    residual: float
    verified: bool
    lower_bound: float | None = None
    iterations: int = 0


def _budget() -> int:
    raw = os.environ.get("OCO_SWITCH_BUDGET")
    if raw is None:
        return DEFAULT_BUDGET
    try:
        return int(float(raw))
    except ValueError as exc:
        raise InvalidArgument(f"OCO_SWITCH_BUDGET is not a number: {raw!r}") from exc


def _require_quadratic(inst: Instance) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    if not inst.all_quadratic:
        raise Unsupported("exact OPT needs quadratic hitting costs")
    return inst.curvature(), inst.centers()


def _project_rows(s: FeasibleSet, X: NDArray[np.float64]) -> NDArray[np.float64]:
    if s.kind == "all-space":
        return X
    if s.kind == "box":
        return np.clip(X, s.lower, s.upper)
    off = X - s.center
    n = np.linalg.norm(off, axis=1, keepdims=True)
    scale = np.where(n > s.radius, s.radius / np.where(n > 0, n, 1.0), 1.0)
    return s.center + off * scale


def _solution(inst: Instance, X: ArrayLike, method: Method, residual: float, verified: bool,
              lower_bound: float | None = None, iterations: int = 0) -> OptSolution:
    traj = Trajectory.from_actions(inst, X, f"opt-{method}")
    return OptSolution(traj, traj.total, method, float(residual), verified, lower_bound, iterations)


# ---------------------------------------------------------------------------
# Quadratic switching: tridiagonal stationarity system
# ---------------------------------------------------------------------------


def quadratic_system(inst: Instance) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """Off-diagonal, per-coordinate diagonal (T, d) and right-hand side (T, d)."""
    a, c = _require_quadratic(inst)
    diag = a + 2.0
    diag[-1] -= 1.0
    rhs = a * c
    rhs[0] += inst.x0
    return np.full(inst.T - 1, -1.0), diag, rhs


def solve_opt_quadratic(inst: Instance) -> OptSolution:
    """Exact optimum for quadratic hitting and quadratic switching costs."""
    if inst.switching != "quadratic":
        raise InvalidArgument("solve_opt_quadratic needs quadratic switching")
    off, diag, rhs = quadratic_system(inst)
    X = thomas_solve(off, diag, off, rhs)
    resid = np.max(np.abs(tridiag_matvec(off, diag, off, X) - rhs)) / max(1.0, float(np.max(np.abs(rhs))))
    for x in X:
        if not inst.feasible.contains(x):
            raise ConstrainedCaseUnsupported("unconstrained optimum leaves the feasible set")
    X = _project_rows(inst.feasible, X)
    return _solution(inst, X, "tridiagonal", resid, bool(resid <= STATIONARITY_TOL))


def closed_form_opt_T2(mu: float, x1star: ArrayLike, x2star: ArrayLike) -> OptSolution:
    """Two-round optimum with identical curvature mu and x_0 = 0."""
    if not mu > 0:
        raise InvalidArgument("mu must be positive")
    s1 = as_vector(x1star)
    s2 = as_vector(x2star, s1.shape[0])
    k = mu / (mu * mu + 3.0 * mu + 1.0)
    X = np.array([k * ((mu + 1.0) * s1 + s2), k * (s1 + (mu + 2.0) * s2)])
    inst = Instance(FeasibleSet.all_space(s1.shape[0]), np.zeros(s1.shape[0]),
                    (FunctionModel.isotropic(mu, s1), FunctionModel.isotropic(mu, s2)))
    return _solution(inst, X, "closed-form-T2", 0.0, True)


# ---------------------------------------------------------------------------
# Linear switching: subgradient descent, polish and dual certificate
# ---------------------------------------------------------------------------


def _linear_objective(a, c, x0, X) -> float:
    prev = np.vstack([x0[None, :], X[:-1]])
    return float(0.5 * np.sum(a * (X - c) ** 2) + np.sum(np.linalg.norm(X - prev, axis=1)))


def _linear_subgradient(a, c, x0, X) -> NDArray[np.float64]:
    prev = np.vstack([x0[None, :], X[:-1]])
    D = X - prev
    n = np.linalg.norm(D, axis=1, keepdims=True)
    # Subgradient of ||.|| at a kink is taken as 0.
    U = np.where(n > 0, D / np.where(n > 0, n, 1.0), 0.0)
    g = a * (X - c) + U
    g[:-1] -= U[1:]
    return g


def _block_phi(A, C, p, q, y) -> float:
    v = 0.5 * float(np.sum(A * (y - C) ** 2)) + float(np.linalg.norm(y - p))
    if q is not None:
        v += float(np.linalg.norm(y - q))
    return v


def _unit(v: NDArray[np.float64]) -> NDArray[np.float64]:
    n = float(np.linalg.norm(v))
    return v / n if n > 0 else np.zeros_like(v)


def block_argmin(A, C, p, q) -> NDArray[np.float64]:
    """argmin_y (1/2) sum A (y - C)^2 + ||y - p|| + ||y - q||; ``q`` may be None."""
    A = np.asarray(A, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    same = q is not None and np.array_equal(p, q)
    gp = A * (p - C)
    if q is None:
        if np.linalg.norm(gp) <= 1.0:
            return p.copy()
    elif same:
        if np.linalg.norm(gp) <= 2.0:
            return p.copy()
    else:
        if np.linalg.norm(gp + _unit(p - q)) <= 1.0:
            return p.copy()
        if np.linalg.norm(A * (q - C) + _unit(q - p)) <= 1.0:
            return q.copy()
    # Minimum is at a smooth point: damped Newton.
    anchors = [p] if q is None or same else [p, q]
    weights = [2.0 if same else 1.0] + [1.0] * (len(anchors) - 1)
    y = C.copy()
    if any(np.array_equal(y, z) for z in anchors):
        y = y + 1e-8 * (1.0 + np.abs(y))
    phi = _block_phi(A, C, p, q, y)
    dim = y.shape[0]
    for _ in range(100):
        g = A * (y - C)
        Hm = np.diag(A)
        for z, wgt in zip(anchors, weights):
            r = y - z
            n = float(np.linalg.norm(r))
            if n == 0.0:
                continue
            u = r / n
            g = g + wgt * u
            # Curvature of ||.|| is capped so the Newton system stays solvable.
            Hm = Hm + wgt * (np.eye(dim) - np.outer(u, u)) / max(n, 1e-9)
        if np.linalg.norm(g) <= 1e-14 * (1.0 + np.linalg.norm(A * C)):
            break
        step = np.linalg.solve(Hm, -g)
        s = 1.0
        while s > 1e-20:
            y_new = y + s * step
            phi_new = _block_phi(A, C, p, q, y_new)
            if phi_new <= phi - 1e-4 * s * float(-g @ step):
                break
            s *= 0.5
        else:
            break
        if np.allclose(y_new, y, rtol=0.0, atol=0.0):
            break
        y, phi = y_new, phi_new
    return y


def _fused_runs(X: NDArray[np.float64]) -> list[tuple[int, int]]:
    runs = []
    start = 0
    for t in range(1, X.shape[0] + 1):
        if t == X.shape[0] or not np.array_equal(X[t], X[t - 1]):
            if t - start >= 2:
                runs.append((start, t))
            start = t
    return runs


def _polish(a, c, x0, X, cycles: int, s: FeasibleSet) -> NDArray[np.float64]:
    T = X.shape[0]
    obj = _linear_objective(a, c, x0, X)
    for _ in range(cycles):
        before = obj
        blocks = [(t, t + 1) for t in range(T)] + _fused_runs(X)
        for lo, hi in blocks:
            A = a[lo:hi].sum(axis=0)
            C = (a[lo:hi] * c[lo:hi]).sum(axis=0) / A
            p = x0 if lo == 0 else X[lo - 1]
            q = X[hi] if hi < T else None
            y = s.project(block_argmin(A, C, p, q))
            trial = X.copy()
            trial[lo:hi] = y
            val = _linear_objective(a, c, x0, trial)
            if val < obj:
                X, obj = trial, val
        if before - obj <= 1e-15 * max(1.0, abs(obj)):
            break
    return X


def _dual_parts(a, c, x0, lam):
    g = lam.copy()
    g[:-1] -= lam[1:]
    xs = c - g / a
    val = float(np.einsum("ij,ij->", g, c - 0.5 * g / a) - lam[0] @ x0)
    return val, xs


def _ball_rows(lam: NDArray[np.float64]) -> NDArray[np.float64]:
    n = np.sqrt(np.einsum("ij,ij->i", lam, lam))[:, None]
    return lam / np.maximum(n, 1.0)


def linear_dual(inst: Instance, X: NDArray[np.float64], iterations: int = 5000,
                target: float | None = None, gap_tol: float = 1e-12) -> tuple[float, NDArray[np.float64]]:
    """Certified lower bound on C_OPT and the primal point it induces.

    Weak duality with multipliers ``||lambda_t|| <= 1`` on the moves gives
    ``sum_t <g_t, c_t> - sum g_t^2 / (2 a_t) - <lambda_1, x_0>`` where
    ``g_t = lambda_t - lambda_{t+1}``. The multipliers start from the
    stationarity guess at ``X`` and are refined by restarted accelerated
    projected ascent; the induced primal point is ``c_t - g_t / a_t``.
    Dropping the set constraint only lowers the bound. Ascent stops early
    once the bound is within ``gap_tol`` (relative) of a known primal ``target``.
    """
    a, c = _require_quadratic(inst)
    x0 = inst.x0
    grads = a * (X - c)
    lam = _ball_rows(-np.cumsum(grads[::-1], axis=0)[::-1])
    best, best_x = _dual_parts(a, c, x0, lam)
    step = float(np.min(a)) / 4.0
    y, lam_prev, tk, last = lam, lam, 1.0, best

    def stop_level(tv: float) -> float:
        return tv - gap_tol * max(1.0, abs(tv))

    stop = math.inf if target is None else stop_level(target)
    g = np.empty_like(X)
    move = np.empty_like(X)
    for k in range(iterations):
        if best >= stop:
            break
        if target is not None and k % 25 == 24:
            cand = _linear_objective(a, c, x0, _project_rows(inst.feasible, best_x))
            if cand < target:
                target = cand
                stop = stop_level(target)
        # Ascent direction: the primal moves x_t(y) - x_{t-1}(y).
        np.copyto(g, y)
        g[:-1] -= y[1:]
        xs = c - g / a
        move[0] = xs[0] - x0
        np.subtract(xs[1:], xs[:-1], out=move[1:])
        lam_new = _ball_rows(y + step * move)
        val, xs_new = _dual_parts(a, c, x0, lam_new)
        if val > best:
            best, best_x = val, xs_new
        if val < last:
            # Restart momentum when the ascent stalls.
            y, lam_prev, tk, last = lam_new, lam_new, 1.0, val
            continue
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * tk * tk))
        y = lam_new + ((tk - 1.0) / t_new) * (lam_new - lam_prev)
        lam_prev, tk, last = lam_new, t_new, val
    return best, best_x


def solve_opt_linear(
    inst: Instance,
    iterations: int = 20000,
    polish_cycles: int = 50,
    tol: float = LINEAR_TOL,
) -> OptSolution:
    """Numerical optimum for linear switching with quadratic hitting costs."""
    if inst.switching != "linear":
        raise InvalidArgument("solve_opt_linear needs linear switching")
    a, c = _require_quadratic(inst)
    x0 = inst.x0
    star = inst.minimizers
    pT = float(np.sum(np.linalg.norm(np.diff(star, axis=0), axis=1)))
    c0 = pT + float(np.linalg.norm(star[0] - x0)) + 1.0
    X = star.copy()
    best_X, best = X, math.inf
    prev = np.empty_like(X)
    scale = c0 / np.sqrt(np.arange(1, iterations + 1))
    for k in range(iterations):
        prev[0] = x0
        prev[1:] = X[:-1]
        D = X - prev
        n = np.sqrt(np.einsum("ij,ij->i", D, D))
        r = X - c
        val = 0.5 * float(np.sum(a * r * r)) + float(n.sum())
        if val < best:
            best_X, best = X, val
        # Subgradient of ||.|| at a kink is taken as 0.
        U = D / np.where(n > 0, n, np.inf)[:, None]
        g = a * r + U
        g[:-1] -= U[1:]
        gn = math.sqrt(float(np.einsum("ij,ij->", g, g)))
        if gn == 0.0:
            break
        X = _project_rows(inst.feasible, X - (scale[k] / gn) * g)
    if _linear_objective(a, c, x0, X) < best:
        best_X = X
    X = best_X
    lb, X_dual = linear_dual(inst, X, target=_linear_objective(a, c, x0, X))
    X_dual = _project_rows(inst.feasible, X_dual)
    if _linear_objective(a, c, x0, X_dual) < _linear_objective(a, c, x0, X):
        X = X_dual
    X = _polish(a, c, x0, X, polish_cycles, inst.feasible)
    # The certificate is stated against the reported trajectory total.
    obj = Trajectory.from_actions(inst, X).total
    lb = min(lb, obj)
    gap = max(obj - lb, 0.0)
    return _solution(inst, X, "subgradient", gap, bool(gap <= tol * max(1.0, abs(obj))), lb, iterations)


# ---------------------------------------------------------------------------
# Brute force
# ---------------------------------------------------------------------------


def brute_force_opt(
    inst: Instance,
    lo: ArrayLike,
    hi: ArrayLike,
    points_per_axis: int,
    budget: int | None = None,
) -> OptSolution:
    """Exhaustive search over all grid trajectories; residual is the spacing."""
    lo = as_vector(lo, inst.d)
    hi = as_vector(hi, inst.d)
    if np.any(lo > hi):
        raise InvalidArgument("grid requires lo <= hi")
    if points_per_axis < 1:
        raise InvalidArgument("points_per_axis must be positive")
    budget = _budget() if budget is None else int(budget)
    axes = [np.array([l]) if l == h else np.linspace(l, h, points_per_axis) for l, h in zip(lo, hi)]
    m = math.prod(len(ax) for ax in axes)
    if float(m) ** inst.T > budget:
        raise InvalidArgument(f"grid of {m}^{inst.T} trajectories exceeds budget {budget}")
    cover = np.vstack([inst.minimizers, inst.x0[None, :]])
    if np.any(cover < lo - 1e-12) or np.any(cover > hi + 1e-12):
        raise InvalidArgument("grid box must cover every minimizer and x0")
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(m, inst.d)
    feasible = inst.feasible.contains_rows(pts)
    hit = np.array([f.values(pts) for f in inst.functions])
    hit[:, ~feasible] = np.inf

    def sw(delta):
        if inst.switching == "quadratic":
            return 0.5 * np.sum(delta * delta, axis=-1)
        return np.linalg.norm(delta, axis=-1)

    pair = sw(pts[:, None, :] - pts[None, :, :]) if inst.T > 1 else None
    start = sw(pts - inst.x0[None, :])
    T = inst.T
    lead = 0
    while lead < T - 1 and float(m) ** (T - lead) > 4e6:
        lead += 1
    best_val, best_idx = math.inf, None
    for prefix in itertools.product(range(m), repeat=lead):
        base = 0.0
        prev = None
        for t, i in enumerate(prefix):
            base += hit[t, i] + (start[i] if prev is None else pair[prev, i])
            prev = i
        if not math.isfinite(base) or base >= best_val:
            continue
        cost = hit[lead] + (start if prev is None else pair[prev])
        for t in range(lead + 1, T):
            cost = cost[..., :, None] + pair + hit[t]
        flat = int(np.argmin(cost))
        val = base + float(cost.reshape(-1)[flat])
        if val < best_val:
            best_val = val
            tail = np.unravel_index(flat, cost.shape) if cost.ndim else ()
            best_idx = tuple(prefix) + tuple(int(i) for i in tail)
    if best_idx is None:
        raise InvalidArgument("no feasible grid trajectory")
    X = pts[list(best_idx)]
    spacing = max((float(ax[1] - ax[0]) if len(ax) > 1 else 0.0) for ax in axes)
    return _solution(inst, X, "brute-force", spacing, True)


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------


def solve_opt(inst: Instance, method: str = "auto", **kwargs) -> OptSolution:
    """Optimum by the named method; ``auto`` picks by switching kind."""
    if method == "auto":
        method = "tridiagonal" if inst.switching == "quadratic" else "subgradient"
    if method == "tridiagonal":
        return solve_opt_quadratic(inst)
    if method == "subgradient":
        return solve_opt_linear(inst, **kwargs)
    if method == "closed-form-T2":
        if inst.T != 2 or inst.switching != "quadratic" or np.any(inst.x0 != 0):
            raise InvalidArgument("closed form needs T=2, quadratic switching and x0=0")
        fs = inst.functions
        if not (fs[0].kind == fs[1].kind == "isotropic-quadratic" and fs[0].mu == fs[1].mu):
            raise InvalidArgument("closed form needs identical isotropic curvature")
        sol = closed_form_opt_T2(fs[0].mu, fs[0].c, fs[1].c)
        return _solution(inst, sol.trajectory.actions, "closed-form-T2", 0.0, True)
    if method == "brute-force":
        cover = np.vstack([inst.minimizers, inst.x0[None, :]])
        lo = kwargs.get("lo", cover.min(axis=0))
        hi = kwargs.get("hi", cover.max(axis=0))
        return brute_force_opt(inst, lo, hi, int(kwargs.get("points_per_axis", 101)), kwargs.get("budget"))
    raise InvalidArgument(f"unknown OPT method {method!r}")
