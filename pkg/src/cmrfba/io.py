"""Reading and writing the YAML model interchange format.

A model document is a YAML mapping::

    format_version: 1
    id: toy
    provenance: free text (optional)
    metabolites:
      - {id: A, name: "Metabolite A"}
      - {id: A_ext, name: "A outside", boundary: true}
    reactions:
      - id: R1
        name: "A uptake"
        bounds: [0, 10]
        stoichiometry: {A: 1}
    roles:
      glucose_uptake: R1
      oxygen_uptake: R1
      lactate_secretion: R1
      biomass: R1
      uptake_sign: {glucose_uptake: import}
      atp_maintenance: R1

``bounds`` may use ``.inf`` and ``-.inf``. ``roles`` is optional, as is
``atp_maintenance`` inside it. ``uptake_sign`` defaults to import for the
uptake roles and export for lactate secretion and biomass. Unknown keys
are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from typing import Any, Dict, List, Optional

import yaml

from .model import (
    ROLE_NAMES, Diagnostic, MetabolicModel, Metabolite, Reaction, RoleMap,
    has_errors, validate_model,
)

FORMAT_VERSION = 1

# Bundled core cancer model. Counts are checked against the asset in tests.
CORE_MODEL_RESOURCE = "core_cancer.yaml"
CORE_METABOLITE_COUNT = 47
CORE_REACTION_COUNT = 54
GLUCOSE_MAX_UPTAKE = 10.0
OXYGEN_MAX_UPTAKE = 10.0
GLUTAMINE_MAX_UPTAKE = 2.0
# Respiratory chain: 10 H+ per NADH, 6 per FADH2, 4 H+ per ATP.
ATP_PER_NADH = 2.5
ATP_PER_FADH2 = 1.5


class ModelParseError(ValueError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)


class ModelValidationError(ValueError):
    def __init__(self, diagnostics: List[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(str(d) for d in diagnostics if d.severity == "error"))


@dataclass(frozen=True)
class ModelDocument:
    model: MetabolicModel
    provenance: str = ""
    format_version: int = FORMAT_VERSION


def _fail(node, message):
    mark = node.start_mark
    raise ModelParseError(message, mark.line + 1, mark.column + 1)


class _Reader:
    def __init__(self, loader):
        self.loader = loader

    def scalar(self, node):
        if not isinstance(node, yaml.ScalarNode):
            _fail(node, "expected a scalar value")
        return self.loader.construct_object(node)

    def string(self, node, what):
        value = self.scalar(node)
        if not isinstance(value, str):
            _fail(node, f"{what} must be a string")
        return value

    def number(self, node, what):
        value = self.scalar(node)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            _fail(node, f"{what} must be a number")
        return float(value)

    def mapping(self, node, what, allowed=None, required=()):
        if not isinstance(node, yaml.MappingNode):
            _fail(node, f"{what} must be a mapping")
        out = {}
        for key_node, value_node in node.value:
            key = self.scalar(key_node)
            if not isinstance(key, str):
                key = str(key) if not isinstance(key, bool) else key_node.value
            if key in out:
                _fail(key_node, f"duplicate key {key!r} in {what}")
            if allowed is not None and key not in allowed:
                _fail(key_node, f"unknown key {key!r} in {what}")
            out[key] = value_node
        for key in required:
            if key not in out:
                _fail(node, f"{what} is missing {key!r}")
        return out

    def sequence(self, node, what):
        if not isinstance(node, yaml.SequenceNode):
            _fail(node, f"{what} must be a list")
        return node.value


def parse_model(text: str) -> ModelDocument:
    """Parse a model document.

    Raises :class:`ModelParseError` (with line and column) for malformed
    input and :class:`ModelValidationError` when the model fails validation.
    Declaration order of metabolites and reactions is preserved.
    """
    loader = yaml.SafeLoader(text)
    try:
        root = loader.get_single_node()
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        raise ModelParseError(exc.problem or str(exc), mark.line + 1, mark.column + 1) from None
    except yaml.YAMLError as exc:
        raise ModelParseError(str(exc)) from None
    finally:
        loader.dispose()
    if root is None:
        raise ModelParseError("empty document", 1, 1)

    rd = _Reader(loader)
    top = rd.mapping(root, "document",
                     allowed={"format_version", "id", "provenance", "metabolites", "reactions", "roles"},
                     required=("format_version", "metabolites", "reactions"))
    version = rd.scalar(top["format_version"])
    if version != FORMAT_VERSION or isinstance(version, bool):
        _fail(top["format_version"], f"unsupported format_version {version!r}")
    model_id = rd.string(top["id"], "id") if "id" in top else "model"
    provenance = ""
    if "provenance" in top:
        provenance = rd.scalar(top["provenance"])
        provenance = "" if provenance is None else str(provenance)

    metabolites = []
    for node in rd.sequence(top["metabolites"], "metabolites"):
        fields = rd.mapping(node, "metabolite", allowed={"id", "name", "boundary"}, required=("id",))
        boundary = False
        if "boundary" in fields:
            boundary = rd.scalar(fields["boundary"])
            if not isinstance(boundary, bool):
                _fail(fields["boundary"], "boundary must be true or false")
        metabolites.append(Metabolite(
            rd.string(fields["id"], "metabolite id"),
            rd.string(fields["name"], "name") if "name" in fields else "",
            boundary))

    reactions = []
    for node in rd.sequence(top["reactions"], "reactions"):
        fields = rd.mapping(node, "reaction", allowed={"id", "name", "bounds", "stoichiometry"},
                            required=("id", "stoichiometry"))
        lower, upper = 0.0, 1000.0
        if "bounds" in fields:
            pair = rd.sequence(fields["bounds"], "bounds")
            if len(pair) != 2:
                _fail(fields["bounds"], "bounds must be [lower, upper]")
            lower, upper = (rd.number(p, "bound") for p in pair)
        stoich = {}
        for met, coef in rd.mapping(fields["stoichiometry"], "stoichiometry").items():
            stoich[met] = rd.number(coef, f"coefficient of {met}")
        reactions.append(Reaction(
            rd.string(fields["id"], "reaction id"), stoich, lower, upper,
            rd.string(fields["name"], "name") if "name" in fields else ""))

    roles = None
    if "roles" in top:
        fields = rd.mapping(top["roles"], "roles",
                            allowed=set(ROLE_NAMES) | {"uptake_sign", "atp_maintenance"},
                            required=ROLE_NAMES)
        signs = {}
        if "uptake_sign" in fields:
            for role, node in rd.mapping(fields["uptake_sign"], "uptake_sign").items():
                signs[role] = rd.string(node, "uptake_sign")
        atpm = rd.string(fields["atp_maintenance"], "atp_maintenance") if "atp_maintenance" in fields else None
        roles = RoleMap(*(rd.string(fields[r], r) for r in ROLE_NAMES), uptake_sign=signs,
                        atp_maintenance=atpm)

    model = MetabolicModel(tuple(metabolites), tuple(reactions), roles, model_id)
    diagnostics = validate_model(model)
    if has_errors(diagnostics):
        raise ModelValidationError(diagnostics)
    return ModelDocument(model, provenance, FORMAT_VERSION)


def _plain_or_quoted(text: str) -> str:
    try:
        plain_ok = text != "" and yaml.safe_load(text) == text and ":" not in text and "#" not in text
    except yaml.YAMLError:
        plain_ok = False
    if plain_ok and text.strip() == text and not text.startswith(("{", "[", "&", "*", "!", "'", '"')):
        return text
    return _quoted(text)


def _quoted(text: str) -> str:
    out = ['"']
    for ch in text:
        if ch == '"' or ch == "\\":
            out.append("\\" + ch)
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif not ch.isprintable():
            code = ord(ch)
            out.append(f"\\x{code:02x}" if code < 0x100 else
                       f"\\u{code:04x}" if code < 0x10000 else f"\\U{code:08x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def format_number(x: float) -> str:
    """Shortest YAML scalar that reads back as exactly ``x``."""
    x = float(x)
    if math.isinf(x):
        return ".inf" if x > 0 else "-.inf"
    if math.isnan(x):
        return ".nan"
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    text = repr(x)
    if "e" in text and "." not in text.split("e")[0]:
        mantissa, exponent = text.split("e")
        text = f"{mantissa}.0e{exponent}"
    return text


def serialize_model(doc: ModelDocument) -> str:
    """Deterministic text for ``doc``; equal documents give identical output.

    Stoichiometry entries follow the model's metabolite order.
    """
    model = doc.model
    diagnostics = validate_model(model)
    if has_errors(diagnostics):
        raise ModelValidationError(diagnostics)
    order = model.metabolite_index
    lines = [f"format_version: {FORMAT_VERSION}", f"id: {_plain_or_quoted(model.id)}"]
    if doc.provenance:
        lines.append("provenance: |")
        lines.extend(("  " + ln).rstrip() for ln in doc.provenance.rstrip("\n").split("\n"))
    lines.append("metabolites:")
    for m in model.metabolites:
        entry = f"  - {{id: {_plain_or_quoted(m.id)}, name: {_quoted(m.name)}"
        if m.boundary:
            entry += ", boundary: true"
        lines.append(entry + "}")
    lines.append("reactions:")
    for r in model.reactions:
        terms = ", ".join(f"{_plain_or_quoted(met)}: {format_number(coef)}"
                          for met, coef in sorted(r.stoichiometry.items(), key=lambda kv: order[kv[0]]))
        lines.append(f"  - id: {_plain_or_quoted(r.id)}")
        lines.append(f"    name: {_quoted(r.name)}")
        lines.append(f"    bounds: [{format_number(r.lower_bound)}, {format_number(r.upper_bound)}]")
        lines.append(f"    stoichiometry: {{{terms}}}")
    if model.roles is not None:
        lines.append("roles:")
        for role in ROLE_NAMES:
            lines.append(f"  {role}: {_plain_or_quoted(getattr(model.roles, role))}")
        if model.roles.atp_maintenance is not None:
            lines.append(f"  atp_maintenance: {_plain_or_quoted(model.roles.atp_maintenance)}")
        signs = model.roles.uptake_sign
        if signs:
            # validated roles only, so the canonical role order covers every key
            body = ", ".join(f"{r}: {signs[r]}" for r in ROLE_NAMES if r in signs)
            lines.append(f"  uptake_sign: {{{body}}}")
    return "\n".join(lines) + "\n"


def read_model(path) -> ModelDocument:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


def write_model(doc: ModelDocument, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_model(doc))


def core_model_text() -> str:
    return resources.files("cmrfba.data").joinpath(CORE_MODEL_RESOURCE).read_text(encoding="utf-8")


_CORE: Optional[ModelDocument] = None


def bundled_core_model() -> ModelDocument:
    """The shipped core cancer-metabolism model (parsed once, then cached)."""
    global _CORE
    if _CORE is None:
        _CORE = parse_model(core_model_text())
    return _CORE


def model_to_dict(model: MetabolicModel) -> Dict[str, Any]:
    """Plain-data summary used in run manifests."""
    return {"id": model.id, "metabolites": len(model.metabolites), "reactions": len(model.reactions)}
