from __future__ import annotations

import numpy as np
import pytest

from ocoswitch.problem_model import FeasibleSet, FunctionModel, Instance


def make_instance(curv, centers, switching="quadratic", feasible=None, x0=None):
    """Isotropic quadratic instance from per-round curvatures and centers (T, d)."""
    C = np.atleast_2d(np.asarray(centers, dtype=float))
    if C.shape[0] == 1 and np.ndim(centers) == 1:
        C = C.T
    curv = np.broadcast_to(np.asarray(curv, dtype=float), (C.shape[0],))
    d = C.shape[1]
    feasible = feasible or FeasibleSet.all_space(d)
    funcs = tuple(FunctionModel.isotropic(a, c) for a, c in zip(curv, C))
    return Instance(feasible, np.zeros(d) if x0 is None else x0, funcs, switching)


@pytest.fixture
def rng():
    return np.random.default_rng(20260414)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
