"""Flux balance analysis, glucose sweeps and the glycolysis/respiration switch."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from .lp import OPTIMAL, LpProblem, SolverOptions, solve
from .model import EXPORT, IMPORT, MetabolicModel, ModelError

ACTIVE_FLUX = 1e-6
GROWTH_TIE_TOL = 1e-9
DEFAULT_LEVEL_COUNT = 20


class SweepDegenerateError(ValueError):
    """A sweep has fewer than two feasible points, so no switch can be judged."""


@dataclass(frozen=True)
class ObjectiveFunction:
    terms: Dict[str, float]
    label: str = ""

    def __post_init__(self):
        if not self.terms:
            raise ValueError("objective needs at least one term")
        for rid, coef in self.terms.items():
            if isinstance(coef, bool) or not math.isfinite(coef):
                raise ValueError(f"objective coefficient for {rid} must be finite")

    @property
    def support(self) -> List[str]:
        return [rid for rid, coef in self.terms.items() if coef != 0]

    def scaled(self, alpha: float) -> "ObjectiveFunction":
        return ObjectiveFunction({rid: alpha * c for rid, c in self.terms.items()}, self.label)

    def vector(self, model: MetabolicModel) -> np.ndarray:
        c = np.zeros(len(model.reactions))
        index = model.reaction_index
        for rid, coef in self.terms.items():
            if rid not in index:
                raise ModelError(f"objective names unknown reaction {rid!r}")
            c[index[rid]] += coef
        return c

    def describe(self) -> str:
        return ",".join(f"{rid}={coef!r}" for rid, coef in self.terms.items())


@dataclass
class FluxDistribution:
    status: str
    reaction_ids: List[str]
    fluxes: Optional[np.ndarray] = None
    objective_value: Optional[float] = None

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    def __getitem__(self, reaction_id: str) -> float:
        if self.fluxes is None:
            raise ValueError(f"no fluxes for a {self.status} problem")
        return float(self.fluxes[self.reaction_ids.index(reaction_id)])

    def as_dict(self) -> Dict[str, float]:
        if self.fluxes is None:
            return {}
        return dict(zip(self.reaction_ids, self.fluxes.tolist()))


def fba_problem(model: MetabolicModel, objective: ObjectiveFunction,
                bounds: Optional[Mapping[str, tuple]] = None) -> LpProblem:
    """LP for maximizing ``objective`` subject to S v = 0 and the flux bounds.

    ``bounds`` overrides individual reaction bounds without copying the model.
    """
    lower = np.array([r.lower_bound for r in model.reactions], dtype=float)
    upper = np.array([r.upper_bound for r in model.reactions], dtype=float)
    for rid, (lo, hi) in (bounds or {}).items():
        j = model.reaction_index[rid]
        lower[j], upper[j] = lo, hi
    S = model.matrix
    return LpProblem(objective.vector(model), S, np.zeros(S.shape[0]), lower, upper)


def run_fba(model: MetabolicModel, objective: ObjectiveFunction,
            options: Optional[SolverOptions] = None,
            bounds: Optional[Mapping[str, tuple]] = None) -> FluxDistribution:
    solution = solve(fba_problem(model, objective, bounds), options)
    if not solution.optimal:
        return FluxDistribution(solution.status, model.reaction_ids)
    return FluxDistribution(OPTIMAL, model.reaction_ids, solution.values, solution.objective_value)


@dataclass(frozen=True)
class SweepPoint:
    glucose_level: float
    status: str
    growth_rate: float = math.nan
    oxygen_uptake: float = math.nan
    lactate_secretion: float = math.nan
    oxygen_norm: float = math.nan
    lactate_norm: float = math.nan

    @property
    def feasible(self) -> bool:
        return self.status == OPTIMAL


@dataclass
class SweepResult:
    points: List[SweepPoint]
    objective: ObjectiveFunction
    model_id: str = "model"

    @property
    def feasible_points(self) -> List[SweepPoint]:
        return [p for p in self.points if p.feasible]


@dataclass(frozen=True)
class SwitchVerdict:
    switched: bool
    low_point: SweepPoint
    high_point: SweepPoint
    margin_low: float
    margin_high: float
    delta: float = 0.0

    def summary(self) -> str:
        return (f"switched={str(self.switched).lower()} "
                f"low_growth={self.low_point.growth_rate!r} margin_low={self.margin_low!r} "
                f"high_growth={self.high_point.growth_rate!r} margin_high={self.margin_high!r} "
                f"delta={self.delta!r}")


def _magnitude(flux: float, sign: str, want: str) -> float:
    """Nonnegative amount moving in direction ``want`` for a reaction oriented by ``sign``."""
    oriented = flux if sign == want else -flux
    return max(oriented, 0.0)


def glucose_bounds(model: MetabolicModel, level: float, capped: bool = False) -> tuple:
    """Bounds that fix (or, with ``capped``, limit) glucose import to ``level``."""
    if model.roles.sign("glucose_uptake") == IMPORT:
        return (0.0, level) if capped else (level, level)
    return (-level, 0.0) if capped else (-level, -level)


def max_glucose_uptake(model: MetabolicModel) -> float:
    r = model.reaction(model.role_reaction("glucose_uptake"))
    limit = r.upper_bound if model.roles.sign("glucose_uptake") == IMPORT else -r.lower_bound
    if not (math.isfinite(limit) and limit > 0):
        raise ModelError("glucose uptake reaction has no finite positive import limit")
    return limit


def default_glucose_levels(model: MetabolicModel, count: int = DEFAULT_LEVEL_COUNT) -> List[float]:
    """Log-spaced levels covering two decades below the model's maximum uptake."""
    top = max_glucose_uptake(model)
    return np.geomspace(top / 100.0, top, count).tolist()


def growth_sweep(model: MetabolicModel, objective: ObjectiveFunction,
                 glucose_levels: Sequence[float], options: Optional[SolverOptions] = None,
                 capped: bool = False, require_switchable: bool = True) -> SweepResult:
    """Run FBA at each glucose level and record growth, O2 uptake and lactate output.

    Glucose uptake is pinned to each level (or only capped when ``capped``).
    Infeasible levels stay in the result but carry no fluxes. Raises
    :class:`SweepDegenerateError` when fewer than two levels are feasible,
    unless ``require_switchable`` is false.
    """
    levels = [float(g) for g in glucose_levels]
    if any(not (g > 0 and math.isfinite(g)) for g in levels):
        raise ValueError("glucose levels must be positive and finite")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("glucose levels must be strictly increasing")

    glc = model.role_reaction("glucose_uptake")
    j_o2 = model.reaction_index[model.role_reaction("oxygen_uptake")]
    j_lac = model.reaction_index[model.role_reaction("lactate_secretion")]
    j_bio = model.reaction_index[model.role_reaction("biomass")]
    o2_sign = model.roles.sign("oxygen_uptake")
    lac_sign = model.roles.sign("lactate_secretion")

    problem = fba_problem(model, objective)
    j_glc = model.reaction_index[glc]
    points = []
    for g in levels:
        problem.lower[j_glc], problem.upper[j_glc] = glucose_bounds(model, g, capped)
        sol = solve(problem, options)
        if not sol.optimal:
            points.append(SweepPoint(g, sol.status))
            continue
        v = sol.values
        o2 = _magnitude(float(v[j_o2]), o2_sign, IMPORT)
        lac = _magnitude(float(v[j_lac]), lac_sign, EXPORT)
        points.append(SweepPoint(g, OPTIMAL, float(v[j_bio]), o2, lac, o2 / g, lac / g))
    result = SweepResult(points, objective, model.id)
    if require_switchable and len(result.feasible_points) < 2:
        raise SweepDegenerateError(
            f"only {len(result.feasible_points)} feasible glucose level(s); need 2")
    return result


def detect_switch(sweep: SweepResult, delta: float = 0.0) -> SwitchVerdict:
    """Judge the switch from the lowest- and highest-growth feasible points.

    At the lowest growth rate normalized O2 uptake must exceed normalized
    lactate secretion by more than ``delta``; at the highest growth rate the
    reverse must hold. Growth rates within ``GROWTH_TIE_TOL`` count as tied,
    and ties go to the smaller glucose level.
    """
    if delta < 0 or math.isnan(delta):
        raise ValueError("delta must be nonnegative")
    feasible = sorted(sweep.feasible_points, key=lambda p: p.glucose_level)
    if len(feasible) < 2:
        raise SweepDegenerateError("switch detection needs at least two feasible points")
    rates = [p.growth_rate for p in feasible]
    lo, hi = min(rates), max(rates)
    tie = GROWTH_TIE_TOL * (1.0 + max(abs(lo), abs(hi)))
    low = next(p for p in feasible if p.growth_rate <= lo + tie)
    high = next(p for p in feasible if p.growth_rate >= hi - tie)
    margin_low = low.oxygen_norm - low.lactate_norm
    margin_high = high.lactate_norm - high.oxygen_norm
    switched = margin_low > delta and margin_high > delta
    return SwitchVerdict(switched, low, high, margin_low, margin_high, delta)


@dataclass
class FeasibilityReport:
    feasible: bool
    active_reactions: List[str] = field(default_factory=list)


def feasibility_check(model: MetabolicModel, options: Optional[SolverOptions] = None) -> FeasibilityReport:
    """Whether any nonzero steady-state flux exists.

    Each reaction is maximized and then minimized; it is active when either
    optimum exceeds ``ACTIVE_FLUX`` in magnitude (or is unbounded).
    """
    if not model.reactions:
        return FeasibilityReport(False, [])
    problem = fba_problem(model, ObjectiveFunction({model.reactions[0].id: 1.0}))
    active = []
    for j, r in enumerate(model.reactions):
        for direction in (1.0, -1.0):
            problem.objective[:] = 0.0
            problem.objective[j] = direction
            sol = solve(problem, options)
            if sol.status == "unbounded" or (sol.optimal and abs(sol.objective_value) > ACTIVE_FLUX):
                active.append(r.id)
                break
    return FeasibilityReport(bool(active), active)


def preset_objectives(model: MetabolicModel) -> Dict[str, ObjectiveFunction]:
    """Objectives drawn from common FBA practice, keyed by name.

    ``biomass`` maximizes the biomass reaction, ``atp`` the ATP maintenance
    drain, ``lactate`` lactate secretion and ``biomass+atp`` the sum of the
    first two.
    """
    biomass = model.role_reaction("biomass")
    lactate = model.role_reaction("lactate_secretion")
    atpm = model.roles.atp_maintenance
    if atpm is None:
        raise ModelError("model declares no atp_maintenance role")
    model.reaction(atpm)
    lac_coef = 1.0 if model.roles.sign("lactate_secretion") == EXPORT else -1.0
    return {
        "biomass": ObjectiveFunction({biomass: 1.0}, "biomass"),
        "atp": ObjectiveFunction({atpm: 1.0}, "atp"),
        "lactate": ObjectiveFunction({lactate: lac_coef}, "lactate"),
        "biomass+atp": ObjectiveFunction({biomass: 1.0, atpm: 1.0}, "biomass+atp"),
    }


def parse_objective(spec: str, model: MetabolicModel) -> ObjectiveFunction:
    """A preset name, or inline terms such as ``"BIOMASS=1,ATPM=0.5"``."""
    spec = spec.strip()
    if "=" not in spec:
        presets = preset_objectives(model)
        if spec not in presets:
            raise ModelError(f"unknown preset {spec!r} (choose from {', '.join(presets)})")
        return presets[spec]
    terms: Dict[str, float] = {}
    for token in spec.split(","):
        rid, _, coef = token.partition("=")
        rid = rid.strip()
        if rid not in model.reaction_index:
            raise ModelError(f"unknown reaction {rid!r} in objective")
        try:
            terms[rid] = terms.get(rid, 0.0) + float(coef)
        except ValueError:
            raise ModelError(f"bad coefficient {coef!r} for {rid}") from None
    return ObjectiveFunction(terms, spec)
