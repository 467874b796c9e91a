"""Metabolic network data model, stoichiometric matrix and structural checks."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

ID_PATTERN = re.compile(r"^[A-Za-z_][A-Za-z0-9_.\-]*$")

ROLE_NAMES = ("glucose_uptake", "oxygen_uptake", "lactate_secretion", "biomass")

IMPORT = "import"
EXPORT = "export"


class ModelError(Exception):
    """Structural problem with a model (dangling reference, bad role, ...)."""


@dataclass(frozen=True)
class Metabolite:
    id: str
    name: str = ""
    boundary: bool = False


@dataclass(frozen=True)
class Reaction:
    """A network reaction.

    ``stoichiometry`` maps metabolite ids to coefficients, negative for
    consumed species and positive for produced ones. Treat it as read-only.
    """

    id: str
    stoichiometry: Dict[str, float]
    lower_bound: float = 0.0
    upper_bound: float = 1000.0
    name: str = ""

    @property
    def reversible(self) -> bool:
        return self.lower_bound < 0 < self.upper_bound

    def with_bounds(self, lower: float, upper: float) -> "Reaction":
        return Reaction(self.id, dict(self.stoichiometry), lower, upper, self.name)


@dataclass(frozen=True)
class RoleMap:
    """Reactions playing a named part in the switch analysis.

    ``uptake_sign`` maps a role name to :data:`IMPORT` when positive flux
    through that reaction means the species enters the system, and to
    :data:`EXPORT` when positive flux means it leaves. Roles missing from
    the map use the default orientation of :func:`default_uptake_sign`.
    ``atp_maintenance`` optionally names the ATP drain used by the ATP
    preset objective.
    """

    glucose_uptake: str
    oxygen_uptake: str
    lactate_secretion: str
    biomass: str
    uptake_sign: Dict[str, str] = field(default_factory=dict)
    atp_maintenance: Optional[str] = None

    def reaction_for(self, role: str) -> str:
        if role not in ROLE_NAMES:
            raise ModelError(f"unknown role {role!r}")
        return getattr(self, role)

    def sign(self, role: str) -> str:
        return self.uptake_sign.get(role, default_uptake_sign(role))


def default_uptake_sign(role: str) -> str:
    return EXPORT if role in ("lactate_secretion", "biomass") else IMPORT


@dataclass(frozen=True)
class MetabolicModel:
    metabolites: Tuple[Metabolite, ...]
    reactions: Tuple[Reaction, ...]
    roles: Optional[RoleMap] = None
    id: str = "model"

    def __post_init__(self):
        object.__setattr__(self, "metabolites", tuple(self.metabolites))
        object.__setattr__(self, "reactions", tuple(self.reactions))

    @cached_property
    def reaction_index(self) -> Dict[str, int]:
        return {r.id: i for i, r in enumerate(self.reactions)}

    @cached_property
    def metabolite_index(self) -> Dict[str, int]:
        return {m.id: i for i, m in enumerate(self.metabolites)}

    @cached_property
    def matrix(self) -> np.ndarray:
        """Read-only stoichiometric matrix, built on first use."""
        S = build_stoichiometric_matrix(self)
        S.flags.writeable = False
        return S

    @property
    def reaction_ids(self) -> List[str]:
        return [r.id for r in self.reactions]

    @property
    def balanced_metabolites(self) -> List[Metabolite]:
        return [m for m in self.metabolites if not m.boundary]

    def reaction(self, reaction_id: str) -> Reaction:
        try:
            return self.reactions[self.reaction_index[reaction_id]]
        except KeyError:
            raise ModelError(f"unknown reaction {reaction_id!r}") from None

    def role_reaction(self, role: str) -> str:
        if self.roles is None:
            raise ModelError("model declares no roles")
        rid = self.roles.reaction_for(role)
        if rid not in self.reaction_index:
            raise ModelError(f"role {role} names missing reaction {rid!r}")
        return rid

    def with_reaction_bounds(self, bounds: Mapping[str, Tuple[float, float]]) -> "MetabolicModel":
        """Copy of the model with the given reactions' bounds replaced."""
        for rid in bounds:
            self.reaction(rid)
        reactions = tuple(
            r.with_bounds(*bounds[r.id]) if r.id in bounds else r for r in self.reactions
        )
        return MetabolicModel(self.metabolites, reactions, self.roles, self.id)

    def __getstate__(self):
        state = dict(self.__dict__)
        state.pop("reaction_index", None)
        state.pop("metabolite_index", None)
        state.pop("matrix", None)
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" or "warning"
    target: str
    message: str

    def __str__(self):
        return f"{self.severity}: {self.target}: {self.message}"


def has_errors(diagnostics: List[Diagnostic]) -> bool:
    return any(d.severity == "error" for d in diagnostics)


def validate_model(model: MetabolicModel) -> List[Diagnostic]:
    """Check the structural invariants of ``model``.

    Returns an empty list when the model is sound. Problems that make the
    model unusable are reported with severity ``"error"``; a biomass
    reaction that drains fewer than two precursors is only a ``"warning"``.
    """
    diags: List[Diagnostic] = []

    def error(target, message):
        diags.append(Diagnostic("error", target, message))

    met_ids = set()
    for m in model.metabolites:
        if not m.id or not ID_PATTERN.match(m.id):
            error(m.id or "<metabolite>", "metabolite id must be a non-empty token")
        if m.id in met_ids:
            error(m.id, "duplicate metabolite id")
        met_ids.add(m.id)

    rxn_ids = set()
    for r in model.reactions:
        if not r.id or not ID_PATTERN.match(r.id):
            error(r.id or "<reaction>", "reaction id must be a non-empty token")
        if r.id in rxn_ids:
            error(r.id, "duplicate reaction id")
        rxn_ids.add(r.id)

        lb, ub = r.lower_bound, r.upper_bound
        if math.isnan(lb) or math.isnan(ub):
            error(r.id, "bounds must not be NaN")
        elif lb > ub:
            error(r.id, f"lower bound {lb!r} exceeds upper bound {ub!r}")
        if lb == math.inf or ub == -math.inf:
            error(r.id, "bounds admit no finite flux")

        if not r.stoichiometry:
            error(r.id, "reaction has no stoichiometry")
        for met, coef in r.stoichiometry.items():
            if met not in met_ids:
                error(r.id, f"references unknown metabolite {met!r}")
            if isinstance(coef, bool) or not isinstance(coef, (int, float)):
                error(r.id, f"coefficient of {met} is not a number")
            elif not math.isfinite(coef):
                error(r.id, f"coefficient of {met} is not finite")
            elif coef == 0:
                error(r.id, f"coefficient of {met} is zero")

    roles = model.roles
    if roles is not None:
        for role in ROLE_NAMES:
            rid = getattr(roles, role)
            if rid not in rxn_ids:
                error(rid or role, f"role {role} names missing reaction")
        if roles.atp_maintenance is not None and roles.atp_maintenance not in rxn_ids:
            error(roles.atp_maintenance, "role atp_maintenance names missing reaction")
        for role, sign in roles.uptake_sign.items():
            if role not in ROLE_NAMES:
                error(role, "uptake_sign given for unknown role")
            elif sign not in (IMPORT, EXPORT):
                error(role, f"uptake_sign must be {IMPORT!r} or {EXPORT!r}, got {sign!r}")
        if roles.biomass in rxn_ids:
            biomass = model.reaction(roles.biomass)
            consumed = [m for m, c in biomass.stoichiometry.items() if c < 0]
            if len(consumed) < 2:
                diags.append(Diagnostic(
                    "warning", roles.biomass,
                    "biomass reaction should consume at least two precursors"))

    return diags


def build_stoichiometric_matrix(model: MetabolicModel) -> np.ndarray:
    """Dense S with one row per balanced metabolite and one column per reaction.

    Boundary metabolites contribute no row.
    """
    rows = {m.id: i for i, m in enumerate(model.balanced_metabolites)}
    known = model.metabolite_index
    S = np.zeros((len(rows), len(model.reactions)))
    for j, r in enumerate(model.reactions):
        for met, coef in r.stoichiometry.items():
            if met not in known:
                raise ModelError(f"reaction {r.id} references unknown metabolite {met!r}")
            i = rows.get(met)
            if i is not None:
                S[i, j] += coef
    return S
