from pathlib import Path

import numpy as np
import pytest

from cmrfba import fba
from cmrfba.io import bundled_core_model, read_model
from cmrfba.model import MetabolicModel, Metabolite, Reaction, RoleMap

DATA = Path(__file__).parent / "data"
PLANTED_LEVELS = (0.25, 0.5, 1.0, 2.0, 4.0, 8.0)
MASS_BALANCE_TOL = 1e-6


class MassBalanceLedger:
    """Every optimal FBA solve in the session lands here."""

    def __init__(self):
        self.count = 0
        self.worst = 0.0

    def record(self, violation):
        self.count += 1
        self.worst = max(self.worst, violation)


MASS_BALANCE = MassBalanceLedger()
ACCEPTANCE = {}


@pytest.fixture(autouse=True, scope="session")
def _mass_balance_guard():
    original = fba.solve

    def checked(problem, options=None):
        sol = original(problem, options)
        if sol.optimal and problem.m:
            violation = float(np.max(np.abs(problem.eq_matrix @ sol.values - problem.eq_rhs)))
            MASS_BALANCE.record(violation)
            assert violation <= MASS_BALANCE_TOL, f"mass balance violated: {violation}"
        return sol

    fba.solve = checked
    yield MASS_BALANCE
    fba.solve = original


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE):
            ok, detail = ACCEPTANCE[key]
            terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {detail}")
    if MASS_BALANCE.count:
        terminalreporter.write_line(
            f"mass balance: {MASS_BALANCE.count} optimal FBA solves, worst |S v| = {MASS_BALANCE.worst:.3g}")


@pytest.fixture(scope="session")
def core():
    return bundled_core_model().model


@pytest.fixture(scope="session")
def planted():
    return read_model(DATA / "planted.yaml").model


def make_model(reactions, metabolites=None, roles=None, boundary=()):
    """Small model from ``{id: (stoichiometry, lb, ub)}``."""
    if metabolites is None:
        seen = []
        for st, _, _ in reactions.values():
            for met in st:
                if met not in seen:
                    seen.append(met)
        metabolites = seen
    mets = tuple(Metabolite(m, m, m in boundary) for m in metabolites)
    rxns = tuple(Reaction(rid, dict(st), lb, ub) for rid, (st, lb, ub) in reactions.items())
    return MetabolicModel(mets, rxns, roles)


@pytest.fixture
def chain():
    return make_model({
        "IN": ({"A": 1}, 0, 10),
        "CONV": ({"A": -1, "B": 1}, 0, 1000),
        "OUT": ({"B": -1}, 0, 1000),
    })


def switch_model(o2_sign="import", lac_sign="export"):
    """Tiny respiring/fermenting network; uptake orientation is configurable."""
    o2 = 1 if o2_sign == "import" else -1
    lac = -1 if lac_sign == "export" else 1
    o2_bounds = (0, 1000) if o2_sign == "import" else (-1000, 0)
    lac_bounds = (0, 1000) if lac_sign == "export" else (-1000, 0)
    return make_model({
        "EX_glc": ({"glc": 1}, 0, 10),
        "GLY": ({"glc": -1, "adp": -2, "pyr": 2, "atp": 2}, 0, 1000),
        "RESP": ({"pyr": -1, "o2": -2.5, "adp": -4, "co2": 3, "atp": 4}, 0, 1000),
        "EX_o2": ({"o2": o2}, *o2_bounds),
        "EX_co2": ({"co2": -1}, 0, 1000),
        "EX_lac": ({"pyr": lac}, *lac_bounds),
        "ATPM": ({"atp": -1, "adp": 1}, 2, 1000),
        "BIO": ({"pyr": -0.01, "atp": -1, "adp": 1}, 0, 1000),
    }, roles=RoleMap("EX_glc", "EX_o2", "EX_lac", "BIO",
                     {"oxygen_uptake": o2_sign, "lactate_secretion": lac_sign}, "ATPM"))


def random_lp(rng, n_max=6, m_max=4):
    """Random bounded LP; most are feasible by construction, some are not."""
    from cmrfba.lp import LpProblem

    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(0, m_max + 1))
    lower = np.round(rng.uniform(-5, 1, n), 2)
    upper = lower + np.round(rng.uniform(0, 6, n), 2)
    A = rng.integers(-3, 4, size=(m, n)).astype(float)
    if m > 1 and rng.random() < 0.2:
        A[-1] = A[0]
    if rng.random() < 0.8:
        b = A @ rng.uniform(lower, upper)
    else:
        b = rng.uniform(-10, 10, m)
    c = rng.integers(-4, 5, n).astype(float)
    return LpProblem(c, A, b, lower, upper)
