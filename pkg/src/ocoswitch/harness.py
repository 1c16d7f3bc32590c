"""Experiment runner: instances in, cost reports and verdicts out.

A run builds instances (inline, from a file, from an adversary recipe or
from the seeded random corpus), plays every configured solver, computes
OPT, and compares each measured quantity with its theoretical bound.

Checks proved as inequalities are mandatory and decide the exit status of
``verify``; anything else is reported as advisory.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
import yaml

from . import bounds as bd
from .adversary import build_recipe
from .errors import InvalidArgument, OcoSwitchError
from .offline_opt import OptSolution, solve_opt
from .online_solvers import SolverSpec, contraction_excess, run_solver
from .problem_model import FeasibleSet, FunctionModel, Instance, Trajectory, trajectory_costs

CSV_COLUMNS = ("instance_id", "algorithm", "t", "hitting_cost", "switching_cost", "cum_total",
               "dist_to_minimizer_sq")
REL_TOL = 1e-9
CONTRACTION_SLACK = 1e-9
ONLINE_LEMMA_SOLVERS = ("omgd",)


# ---------------------------------------------------------------------------
# Random corpus
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorpusSpec:
    """Ranges for the seeded random quadratic corpus.

    Curvatures are uniform in [mu, L] with one round pinned at mu, so the
    certified pair is (mu, max curvature). Centers are uniform in a ball of
    ``radius`` around the origin, which keeps them interior to any set the
    corpus is later restricted to.
    """

    count: int = 200
    d_max: int = 5
    T_max: int = 50
    mu_min: float = 0.05
    mu_max: float = 2.0
    ratio_max: float = 10.0
    radius: float = 1.0
    switching: str = "quadratic"

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> CorpusSpec:
        known = {k: doc[k] for k in cls.__dataclass_fields__ if k in doc}
        return cls(**known)


def random_instance(rng: np.random.Generator, spec: CorpusSpec = CorpusSpec()) -> Instance:
    d = int(rng.integers(1, spec.d_max + 1))
    T = int(rng.integers(1, spec.T_max + 1))
    mu = float(rng.uniform(spec.mu_min, spec.mu_max))
    ell = float(rng.uniform(mu, spec.ratio_max * mu))
    curv = rng.uniform(mu, ell, size=T)
    curv[int(rng.integers(T))] = mu
    direction = rng.normal(size=(T, d))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    centers = direction * (spec.radius * rng.uniform(size=(T, 1)) ** (1.0 / d))
    funcs = tuple(FunctionModel.isotropic(a, c) for a, c in zip(curv, centers))
    return Instance(FeasibleSet.all_space(d), np.zeros(d), funcs, spec.switching,
                    {"mu_draw": mu, "ell_draw": ell})


def random_corpus(seed: int, spec: CorpusSpec = CorpusSpec()) -> list[Instance]:
    rng = np.random.default_rng(seed)
    return [random_instance(rng, spec) for _ in range(spec.count)]


def restrict_to_box(inst: Instance, half_width: float) -> Instance:
    """Same instance over the cube [-half_width, half_width]^d."""
    d = inst.d
    return inst.with_set(FeasibleSet.box(np.full(d, -half_width), np.full(d, half_width)))


def max_gradient_norm(inst: Instance) -> float:
    """max over rounds and over the set of ||grad f_t(x)||; inf if unbounded."""
    s = inst.feasible
    if s.kind == "all-space":
        return math.inf
    best = 0.0
    for f in inst.functions:
        if not f.is_quadratic:
            raise InvalidArgument("gradient bound needs quadratic models")
        if s.kind == "box":
            # Separable convex maximisation is attained at a vertex.
            g = float(np.linalg.norm(f.a * s.farthest_offsets(f.c)))
        elif f.kind == "isotropic-quadratic":
            g = f.mu * (float(np.linalg.norm(f.c - s.center)) + s.radius)
        else:
            g = f.ell * (float(np.linalg.norm(f.c - s.center)) + s.radius)
        best = max(best, g)
    return best


# ---------------------------------------------------------------------------
# Costs and checks
# ---------------------------------------------------------------------------


def evaluate_costs(inst: Instance, traj: Trajectory | np.ndarray) -> tuple[float, float, float]:
    """Hitting total, switching total (including the move from x_0) and their sum."""
    actions = traj.actions if isinstance(traj, Trajectory) else np.asarray(traj, dtype=np.float64)
    hit, sw = trajectory_costs(inst, actions)
    return float(hit.sum()), float(sw.sum()), float(hit.sum() + sw.sum())


@dataclass(frozen=True)
class BoundCheck:
    """One measured-versus-theory comparison.

    ``slack`` is positive when the inequality holds with room to spare;
    ``satisfied`` means ``slack >= -tolerance``.
    """

    name: str
    kind: str
    theoretical: float
    measured: float
    slack: float
    tolerance: float
    mandatory: bool

    @property
    def satisfied(self) -> bool:
        return bool(self.slack >= -self.tolerance)

    def summary(self) -> dict[str, Any]:
        return {"name": self.name, "theoretical": self.theoretical, "measured": self.measured,
                "satisfied": self.satisfied, "slack": self.slack}

    def to_dict(self) -> dict[str, Any]:
        out = self.summary()
        out.update(kind=self.kind, tolerance=self.tolerance, mandatory=self.mandatory)
        return out


def make_check(report: bd.BoundReport, measured: float, mandatory: bool = True,
               tolerance: float | None = None) -> BoundCheck:
    theo = float(report.value)
    if report.kind.startswith("upper"):
        slack = theo - measured
    else:
        slack = measured - theo
    tol = REL_TOL * max(1.0, abs(theo)) if tolerance is None else tolerance
    return BoundCheck(report.name, report.kind, theo, float(measured), float(slack), float(tol), mandatory)


@dataclass(frozen=True)
class CostReport:
    instance_id: str
    algorithm: str
    hitting: float
    switching: float
    total: float
    opt: float
    opt_method: str
    opt_verified: bool
    cr: float
    regret: float
    path: bd.PathStats
    checks: tuple[BoundCheck, ...]
    comparator_ratio: float | None = None
    trajectory: Trajectory | None = field(default=None, repr=False, compare=False)

    @property
    def passed(self) -> bool:
        return all(c.satisfied for c in self.checks if c.mandatory)

    def failures(self) -> list[BoundCheck]:
        return [c for c in self.checks if c.mandatory and not c.satisfied]

    def summary(self) -> dict[str, Any]:
        return {
            "instance_id": self.instance_id,
            "algorithm": self.algorithm,
            "total": self.total,
            "opt": self.opt,
            "cr": self.cr,
            "regret": self.regret,
            "path_pT": self.path.pT,
            "path_p2T": self.path.p2T,
            "x1norm": self.path.x1norm,
            "bounds": [c.summary() for c in self.checks],
        }


def _comparator_actions(inst: Instance, comparator: Any) -> np.ndarray | None:
    if comparator is None:
        return None
    if isinstance(comparator, str):
        if comparator != "minimizers":
            raise InvalidArgument(f"unknown comparator {comparator!r}")
        return np.array(inst.minimizers)
    u = np.asarray(comparator, dtype=np.float64).reshape(inst.T, inst.d)
    return u


def build_checks(
    inst: Instance,
    traj: Trajectory,
    opt: OptSolution,
    ps: bd.PathStats,
    comparator_ratio: float | None = None,
    comparator_is_minimizers: bool = False,
) -> list[BoundCheck]:
    mu, ell = inst.mu, inst.ell
    kind = inst.switching
    interior = inst.interior
    algo = traj.algorithm
    C_A = traj.total
    checks: list[BoundCheck] = []
    exact_opt = opt.verified and opt.method != "brute-force"
    rel_gap = opt.residual / max(opt.objective, 1e-300) if opt.method == "subgradient" else 0.0

    def ratio_check(report: bd.BoundReport, measured: float, mandatory: bool = True) -> None:
        tol = REL_TOL * max(1.0, abs(report.value)) + rel_gap * abs(report.value)
        checks.append(make_check(report, measured, mandatory, tol))

    cr = C_A / opt.objective if opt.objective > 0 else (1.0 if C_A == 0 else math.inf)

    if exact_opt:
        checks.append(make_check(bd.opt_lower_bound(ps, mu, kind), opt.objective))
        checks.append(make_check(bd.opt_trivial_upper_bound(ps, kind), opt.objective))
        minimal = bd.BoundReport("opt-minimality", opt.objective, "lower-on-cost")
        checks.append(make_check(minimal, C_A, tolerance=REL_TOL * max(1.0, opt.objective) + opt.residual))

    lemma_mandatory = algo in ONLINE_LEMMA_SOLVERS
    if algo in ("omgd", "omgd-nag"):
        excess = contraction_excess(inst, traj)
        worst = float(excess.max()) if excess.size else 0.0
        checks.append(make_check(bd.BoundReport("contraction", 0.0, "upper-on-cost"), worst,
                                 lemma_mandatory, CONTRACTION_SLACK))
        dist = float(np.sum((traj.actions - inst.minimizers) ** 2))
        checks.append(make_check(bd.sum_dist_sq_bound(ps), dist, lemma_mandatory))
        checks.append(make_check(bd.switching_bound(ps, kind), traj.switching_total, lemma_mandatory))
        if ps.gradSq == 0 or ps.x1sq + 2 * ps.p2T > 0:
            checks.append(make_check(bd.hitting_bound(ps, ell), traj.hitting_total, lemma_mandatory))
            checks.append(make_check(bd.omgd_total_cost_bound(ps, mu, ell, None, kind), C_A, lemma_mandatory))
        if exact_opt and kind == "quadratic":
            if interior:
                ratio_check(bd.cr_upper_quadratic(mu, ell), cr, lemma_mandatory)
                checks.append(make_check(bd.regret_upper_vt2(mu, ell, ps.x1norm + ps.pT), C_A - opt.objective,
                                         lemma_mandatory))
            elif ps.p2T > 0:
                checks.append(make_check(bd.gamma_cost_bound(ps, ell), C_A, lemma_mandatory))
                ratio_check(bd.cr_upper_gamma(mu, ell, bd.gamma_of(ps)), cr, lemma_mandatory)
            if inst.feasible.bounded:
                G = max_gradient_norm(inst)
                D = inst.feasible.diameter()
                regret = C_A - opt.objective
                for rep in bd.regret_bounds(ps, mu, ell, G, D):
                    checks.append(make_check(rep, regret, lemma_mandatory,
                                             REL_TOL * max(1.0, abs(rep.value)) + opt.residual))
        if exact_opt and kind == "linear" and interior and ps.sumFstar == 0 and ps.p2T + ps.x1sq > 0:
            ratio_check(bd.cr_upper_linear(ps, mu, ell), cr, lemma_mandatory)
        if comparator_ratio is not None and comparator_is_minimizers and kind == "quadratic" and interior:
            ratio_check(bd.cr_upper_comparator(mu, ell), comparator_ratio, lemma_mandatory)

    recipe = inst.meta.get("recipe")
    params = inst.meta.get("params", {})
    if exact_opt and recipe == "omgd-lb" and algo == "omgd":
        ratio_check(bd.cr_lower_omgd(mu, ell), cr)
    if exact_opt and recipe == "preliminary-L":
        ratio_check(bd.cr_lower_universal(ell), cr)
    if exact_opt and recipe == "linear-lb":
        # The exact OPT can exceed 2(theta - 1/mu), so only OMGD's play x_2 = theta is covered.
        th, m = params["theta"], params["mu"]
        chain = bd.BoundReport("cr-lower-linear-chain", m * th * th / (4.0 * (th - 1.0 / m)), "lower-on-cr")
        ratio_check(chain, cr, algo == "omgd")
        ratio_check(bd.cr_lower_linear(ps, mu), cr, algo == "omgd")
    if recipe == "modified-L-sqrtmu":
        checks.append(make_check(bd.BoundReport("online-cost-modified", ell / 2.0, "lower-on-cost"), C_A))
        if exact_opt:
            trend = bd.BoundReport("cr-trend-modified", 0.3 * ell / math.sqrt(mu), "lower-on-cr")
            ratio_check(trend, cr, mandatory=False)
    return checks


def make_report(
    inst: Instance,
    traj: Trajectory,
    opt: OptSolution,
    instance_id: str = "instance",
    comparator: Any = None,
    selection: Sequence[str] | None = None,
) -> CostReport:
    hit, sw, total = evaluate_costs(inst, traj)
    ps = bd.path_stats(inst)
    u = _comparator_actions(inst, comparator)
    comp_ratio = None
    if u is not None:
        comp_cost = evaluate_costs(inst, u)[2]
        comp_ratio = total / comp_cost if comp_cost > 0 else math.inf
    checks = build_checks(inst, traj, opt, ps, comp_ratio, isinstance(comparator, str))
    if selection:
        checks = [c for c in checks if c.name in selection]
    cr = total / opt.objective if opt.objective > 0 else (1.0 if total == 0 else math.inf)
    return CostReport(instance_id, traj.algorithm, hit, sw, total, opt.objective, opt.method, opt.verified,
                      cr, total - opt.objective, ps, tuple(checks), comp_ratio, traj)


def verify(inst: Instance, reports: Iterable[CostReport]) -> tuple[list[dict[str, Any]], int]:
    """Verdict rows for every check and an exit status (1 if a mandatory check fails)."""
    rows = []
    status = 0
    for rep in reports:
        for c in rep.checks:
            row = {"instance_id": rep.instance_id, "algorithm": rep.algorithm, **c.to_dict()}
            rows.append(row)
            if c.mandatory and not c.satisfied:
                status = 1
    return rows, status


def per_round_rows(inst: Instance, traj: Trajectory, instance_id: str) -> list[list[Any]]:
    dist = np.sum((traj.actions - inst.minimizers) ** 2, axis=1)
    cum = np.cumsum(traj.hitting + traj.switching)
    return [[instance_id, traj.algorithm, t + 1, float(traj.hitting[t]), float(traj.switching[t]),
             float(cum[t]), float(dist[t])] for t in range(traj.T)]


# ---------------------------------------------------------------------------
# Configuration and runs
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    instances: list[tuple[str, Instance]]
    solvers: list[SolverSpec]
    opt_method: str = "auto"
    opt_options: dict[str, Any] = field(default_factory=dict)
    bounds: list[str] = field(default_factory=list)
    seed: int = 0
    out_dir: Path | None = None
    comparator: Any = None
    corrupt_scale: float | None = None

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any], base_dir: Path | None = None) -> ExperimentConfig:
        base_dir = base_dir or Path.cwd()
        seed = int(doc.get("seed", 0))
        instances = _instances_from(doc, base_dir, seed)
        solvers = [_solver_from(s) for s in doc.get("solvers", ["omgd"])]
        out_dir = doc.get("out_dir")
        corrupt = doc.get("corrupt")
        scale = None
        if corrupt is not None:
            scale = float(corrupt.get("scale", 10.0)) if isinstance(corrupt, Mapping) else float(corrupt)
        return cls(
            instances=instances,
            solvers=solvers,
            opt_method=str(doc.get("opt_method", "auto")),
            opt_options=dict(doc.get("opt_options", {})),
            bounds=list(doc.get("bounds", [])),
            seed=seed,
            out_dir=None if out_dir is None else (base_dir / out_dir if not Path(out_dir).is_absolute() else Path(out_dir)),
            comparator=doc.get("comparator"),
            corrupt_scale=scale,
        )

    @classmethod
    def load(cls, path: str | Path) -> ExperimentConfig:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise OSError(f"cannot read config {path}: {exc.strerror}") from exc
        doc = yaml.safe_load(text)
        if not isinstance(doc, Mapping):
            raise InvalidArgument(f"config {path} must be a mapping")
        return cls.from_dict(doc, path.parent)


def _solver_from(doc: Any) -> SolverSpec:
    if isinstance(doc, str):
        return SolverSpec(doc)
    if isinstance(doc, Mapping):
        return SolverSpec(**dict(doc))
    raise InvalidArgument(f"bad solver entry {doc!r}")


def _sweep(params: Mapping[str, Any]) -> list[dict[str, Any]]:
    keys = list(params)
    values = [v if isinstance(v, list) else [v] for v in params.values()]
    return [dict(zip(keys, combo)) for combo in itertools.product(*values)]


def _instances_from(doc: Mapping[str, Any], base_dir: Path, seed: int) -> list[tuple[str, Instance]]:
    sources = [k for k in ("instance", "recipe", "corpus") if k in doc]
    if len(sources) != 1:
        raise InvalidArgument("config needs exactly one of instance, recipe or corpus")
    if "instance" in doc:
        spec = doc["instance"]
        if isinstance(spec, Mapping) and "file" in spec:
            path = base_dir / spec["file"]
            try:
                inst_doc = yaml.safe_load(path.read_text())
            except OSError as exc:
                raise OSError(f"cannot read instance file {path}: {exc.strerror}") from exc
            return [(path.stem, Instance.from_dict(inst_doc))]
        return [(str(spec.get("id", "inline")), Instance.from_dict(spec))]
    if "recipe" in doc:
        spec = dict(doc["recipe"])
        name = spec.pop("name")
        out = []
        for i, params in enumerate(_sweep(spec)):
            out.append((f"{name}-{i:03d}", build_recipe(name, params)))
        return out
    spec = dict(doc["corpus"])
    cspec = CorpusSpec.from_dict(spec)
    insts = random_corpus(int(spec.get("seed", seed)), cspec)
    box = spec.get("box_half_width")
    if box is not None:
        insts = [restrict_to_box(x, float(box)) for x in insts]
    return [(f"corpus-{i:04d}", x) for i, x in enumerate(insts)]


def _dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=True) + "\n"


def run_experiment(cfg: ExperimentConfig) -> list[CostReport]:
    """Run every solver on every instance; write rounds.csv and summary.json if out_dir is set."""
    reports: list[CostReport] = []
    rows: list[list[Any]] = []
    for inst_id, inst in cfg.instances:
        opt = solve_opt(inst, cfg.opt_method, **cfg.opt_options)
        for spec in cfg.solvers:
            traj = run_solver(inst, spec)
            if cfg.corrupt_scale is not None:
                traj = Trajectory.from_actions(inst, traj.actions * cfg.corrupt_scale, traj.algorithm)
            rep = make_report(inst, traj, opt, inst_id, cfg.comparator, cfg.bounds or None)
            reports.append(rep)
            rows.extend(per_round_rows(inst, traj, inst_id))
    if cfg.out_dir is not None:
        write_outputs(cfg.out_dir, reports, rows)
    return reports


def write_outputs(out_dir: Path, reports: Sequence[CostReport], rows: Sequence[Sequence[Any]]) -> None:
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])
        (out_dir / "rounds.csv").write_text(buf.getvalue())
        (out_dir / "summary.json").write_text(_dumps([r.summary() for r in reports]))
    except OSError as exc:
        raise OSError(f"cannot write outputs to {out_dir}: {exc.strerror}") from exc


def write_verdict(out_dir: Path, rows: Sequence[Mapping[str, Any]], status: int) -> None:
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "verdict.json").write_text(_dumps({"status": status, "checks": list(rows)}))
    except OSError as exc:
        raise OSError(f"cannot write verdict to {out_dir}: {exc.strerror}") from exc


def verify_experiment(cfg: ExperimentConfig) -> tuple[list[CostReport], list[dict[str, Any]], int]:
    reports = run_experiment(cfg)
    rows: list[dict[str, Any]] = []
    status = 0
    by_id = dict(cfg.instances)
    for inst_id in dict.fromkeys(r.instance_id for r in reports):
        part, st = verify(by_id[inst_id], [r for r in reports if r.instance_id == inst_id])
        rows.extend(part)
        status = max(status, st)
    if cfg.out_dir is not None:
        write_verdict(cfg.out_dir, rows, status)
    return reports, rows, status


__all__ = [
    "BoundCheck", "CorpusSpec", "CostReport", "ExperimentConfig", "OcoSwitchError", "build_checks",
    "evaluate_costs", "make_report", "max_gradient_norm", "random_corpus", "random_instance",
    "restrict_to_box", "run_experiment", "verify", "verify_experiment",
]
