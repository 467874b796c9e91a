"""Command-line interface.

Exit codes: 0 success, 1 domain or validation error, 2 I/O error.
Numbers in output tables carry 17 significant digits, enough to read back
every double exactly.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from pathlib import Path
from typing import List, Optional

import numpy as np
import yaml

from . import __version__
from .ensemble import SamplerConfig, default_workers, reaction_frequencies, run_ensemble
from .fba import (
    SweepDegenerateError, default_glucose_levels, detect_switch, glucose_bounds, growth_sweep,
    parse_objective, run_fba,
)
from .io import ModelParseError, ModelValidationError, bundled_core_model, core_model_text, parse_model
from .model import ModelError, validate_model

EXIT_OK, EXIT_DOMAIN, EXIT_IO = 0, 1, 2

SWEEP_HEADER = ["glucose_level", "growth_rate", "o2_uptake", "lactate_secretion",
                "o2_norm", "lac_norm", "status"]


class CliError(Exception):
    def __init__(self, message, code=EXIT_DOMAIN):
        super().__init__(message)
        self.code = code


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def parse_levels(spec: str) -> List[float]:
    """``"1,2,5"`` or ``"log:<lo>:<hi>:<n>"``."""
    try:
        if spec.startswith("log:"):
            lo, hi, n = spec[4:].split(":")
            return np.geomspace(float(lo), float(hi), int(n)).tolist()
        return [float(x) for x in spec.split(",") if x.strip()]
    except ValueError:
        raise CliError(f"cannot parse levels {spec!r}") from None


def _load(path: Optional[str]):
    """Returns (document, source text, display path)."""
    if path is None:
        return bundled_core_model(), core_model_text(), "<bundled:core_cancer>"
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from None
    try:
        return parse_model(text), text, path
    except ModelParseError as exc:
        raise CliError(f"{path}: {exc}") from None
    except ModelValidationError as exc:
        raise CliError(f"{path}: invalid model: {exc}") from None


def _manifest(args, command, config, seed, doc, text, source, started):
    return {
        "tool": "cmrfba",
        "version": __version__,
        "command": command,
        "argv": list(args.argv),
        "config": config,
        "seed": seed,
        "model": {
            "source": source,
            "id": doc.model.id,
            "sha256": hashlib.sha256(text.encode("utf-8")).hexdigest(),
            "provenance": doc.provenance,
        },
        "duration_seconds": time.perf_counter() - started,
    }


def _write_json(path: Path, data) -> None:
    try:
        path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_IO) from None


def _write_csv(path: Path, header, rows) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_IO) from None


def cmd_validate(args) -> int:
    if args.model is None:
        text, source = core_model_text(), "<bundled:core_cancer>"
    else:
        try:
            text, source = Path(args.model).read_text(encoding="utf-8"), args.model
        except (OSError, UnicodeDecodeError) as exc:
            raise CliError(f"cannot read {args.model}: {exc}", EXIT_IO) from None
    try:
        doc = parse_model(text)
    except ModelParseError as exc:
        print(f"{source}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ModelValidationError as exc:
        for d in exc.diagnostics:
            print(f"{source}: {d}", file=sys.stderr)
        return EXIT_DOMAIN
    for d in validate_model(doc.model):
        print(f"{source}: {d}", file=sys.stderr)
    m = doc.model
    print(f"{source}: ok ({len(m.metabolites)} metabolites, {len(m.reactions)} reactions)")
    return EXIT_OK


def cmd_fba(args) -> int:
    started = time.perf_counter()
    doc, text, source = _load(args.model)
    model = doc.model
    objective = parse_objective(args.objective, model)
    bounds = None
    if args.glucose is not None:
        bounds = {model.role_reaction("glucose_uptake"): glucose_bounds(model, args.glucose)}
    result = run_fba(model, objective, bounds=bounds)
    print(f"status={result.status}")
    if result.optimal:
        print(f"objective_value={fmt(result.objective_value)}")
    if args.out:
        out = Path(args.out)
        rows = [[rid, fmt(v)] for rid, v in result.as_dict().items()]
        _write_csv(out, ["reaction_id", "flux"], rows)
        config = {"objective": objective.terms, "glucose": args.glucose}
        _write_json(out.with_name(out.name + ".manifest.json"),
                    _manifest(args, "fba", config, None, doc, text, source, started))
    return EXIT_OK if result.optimal else EXIT_DOMAIN


def cmd_sweep(args) -> int:
    started = time.perf_counter()
    doc, text, source = _load(args.model)
    model = doc.model
    objective = parse_objective(args.objective, model)
    levels = parse_levels(args.levels) if args.levels else default_glucose_levels(model)
    try:
        sweep = growth_sweep(model, objective, levels, capped=args.capped, require_switchable=False)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    rows = []
    for p in sweep.points:
        if p.feasible:
            rows.append([fmt(p.glucose_level), fmt(p.growth_rate), fmt(p.oxygen_uptake),
                         fmt(p.lactate_secretion), fmt(p.oxygen_norm), fmt(p.lactate_norm), p.status])
        else:
            rows.append([fmt(p.glucose_level), "", "", "", "", "", p.status])
    out = Path(args.out)
    _write_csv(out, SWEEP_HEADER, rows)
    config = {"objective": objective.terms, "levels": levels, "delta": args.delta, "capped": args.capped}
    _write_json(out.with_name(out.name + ".manifest.json"),
                _manifest(args, "sweep", config, None, doc, text, source, started))
    try:
        verdict = detect_switch(sweep, args.delta)
    except SweepDegenerateError as exc:
        raise CliError(f"switch undetermined: {exc}") from None
    print(verdict.summary())
    return EXIT_OK


def _ensemble_config(args) -> SamplerConfig:
    data = {}
    if args.config:
        try:
            raw = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise CliError(f"cannot read {args.config}: {exc}", EXIT_IO) from None
        try:
            data = yaml.safe_load(raw) or {}
        except yaml.YAMLError as exc:
            raise CliError(f"{args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise CliError(f"{args.config}: config must be a mapping")
        unknown = set(data) - {"seed", "samples", "max_support", "coefficient_range",
                               "allow_negative", "glucose_levels", "delta"}
        if unknown:
            raise CliError(f"{args.config}: unknown keys {sorted(unknown)}")
    for key in ("seed", "samples", "max_support", "delta"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    if args.allow_negative:
        data["allow_negative"] = True
    if args.levels:
        data["glucose_levels"] = args.levels
    levels = data.get("glucose_levels")
    if isinstance(levels, str):
        data["glucose_levels"] = parse_levels(levels)
    try:
        if data.get("glucose_levels") is not None:
            data["glucose_levels"] = tuple(float(g) for g in data["glucose_levels"])
        if "coefficient_range" in data:
            data["coefficient_range"] = tuple(float(x) for x in data["coefficient_range"])
        if "delta" in data:
            data["delta"] = float(data["delta"])
        return SamplerConfig(**data)
    except (TypeError, ValueError) as exc:
        raise CliError(f"invalid ensemble config: {exc}") from None


def cmd_ensemble(args) -> int:
    started = time.perf_counter()
    doc, text, source = _load(args.model)
    model = doc.model
    config = _ensemble_config(args)
    try:
        config = config.resolved(model)
    except ValueError as exc:
        raise CliError(f"invalid ensemble config: {exc}") from None
    workers = args.workers or default_workers()
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create {out}: {exc}", EXIT_IO) from None

    report = run_ensemble(model, config, workers=workers)

    summary = {
        "total": report.total,
        "success_count": report.success_count,
        "failures": report.failures,
        "frequencies_empty": report.frequencies_empty,
    }
    _write_json(out / "summary.json", summary)
    rows = [[s.index, rid, fmt(coef)] for s in report.successes for rid, coef in s.objective.terms.items()]
    _write_csv(out / "successes.csv", ["sample_index", "reaction_id", "coefficient"], rows)
    _write_csv(out / "frequencies.csv", ["reaction_id", "frequency"],
               [[rid, fmt(f)] for rid, f in reaction_frequencies(report)])
    manifest = _manifest(args, "ensemble", config.to_dict(), config.seed, doc, text, source, started)
    manifest["workers"] = workers
    _write_json(out / "manifest.json", manifest)
    print(f"{report.success_count}/{report.total}")
    return EXIT_OK


def frequencies_from_table(rows) -> List[tuple]:
    """Frequency table from ``sample_index,reaction_id,coefficient`` rows."""
    supports = {}
    for row in rows:
        index, rid, coef = int(row["sample_index"]), row["reaction_id"], float(row["coefficient"])
        terms = supports.setdefault(index, set())
        if coef != 0:
            terms.add(rid)
    if not supports:
        return []
    counts = {}
    for terms in supports.values():
        for rid in terms:
            counts[rid] = counts.get(rid, 0) + 1
    return sorted(((rid, c / len(supports)) for rid, c in counts.items()), key=lambda kv: (-kv[1], kv[0]))


def cmd_freq(args) -> int:
    try:
        with open(args.successes, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != ["sample_index", "reaction_id", "coefficient"]:
                raise CliError(f"{args.successes}: unexpected header {reader.fieldnames}")
            table = frequencies_from_table(reader)
    except OSError as exc:
        raise CliError(f"cannot read {args.successes}: {exc}", EXIT_IO) from None
    except (KeyError, ValueError) as exc:
        raise CliError(f"{args.successes}: malformed row: {exc}") from None
    rows = [[rid, fmt(f)] for rid, f in table]
    if args.out:
        _write_csv(Path(args.out), ["reaction_id", "frequency"], rows)
    else:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(["reaction_id", "frequency"])
        writer.writerows(rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cmrfba", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"cmrfba {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def model_arg(p):
        p.add_argument("--model", help="model file (default: bundled core cancer model)")

    p = sub.add_parser("validate", help="check a model file")
    model_arg(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("fba", help="single FBA run")
    model_arg(p)
    p.add_argument("--objective", required=True, help="preset name or 'id=coef,id=coef'")
    p.add_argument("--glucose", type=float, help="pin glucose uptake to this level")
    p.add_argument("--out", help="flux table (CSV)")
    p.set_defaults(func=cmd_fba)

    p = sub.add_parser("sweep", help="glucose sweep and switch verdict")
    model_arg(p)
    p.add_argument("--objective", required=True, help="preset name or 'id=coef,id=coef'")
    p.add_argument("--levels", help="'1,2,5' or 'log:<lo>:<hi>:<n>' (default: 20 log levels)")
    p.add_argument("--delta", type=float, default=0.0, help="switch margin")
    p.add_argument("--capped", action="store_true", help="cap glucose uptake instead of pinning it")
    p.add_argument("--out", required=True, help="sweep table (CSV)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ensemble", help="random objective ensemble")
    model_arg(p)
    p.add_argument("--config", help="YAML/JSON file with sampler settings; flags take precedence")
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--max-support", dest="max_support", type=int)
    p.add_argument("--allow-negative", dest="allow_negative", action="store_true")
    p.add_argument("--levels")
    p.add_argument("--delta", type=float)
    p.add_argument("--workers", type=int, help="worker processes (default: available CPUs)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("freq", help="frequency table from a stored successes.csv")
    p.add_argument("--successes", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_freq)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
