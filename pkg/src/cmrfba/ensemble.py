"""Random objective-function ensembles screened for the metabolic switch.

Every sample index gets its own random stream, derived from the run seed
and the index with numpy's ``SeedSequence(seed, spawn_key=(index,))`` and
fed to a PCG64 generator. Streams do not depend on worker count, chunking
or the total number of samples, so a sample's outcome is a function of
(model, config, index) alone.
"""

from __future__ import annotations

import json
import math
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .fba import (
    ObjectiveFunction, SweepDegenerateError, SwitchVerdict, default_glucose_levels,
    detect_switch, growth_sweep,
)
from .lp import ITERATION_LIMIT
from .model import MetabolicModel

SWITCH = "switch"
NO_SWITCH = "no_switch"
INFEASIBLE_SWEEP = "infeasible_sweep"
SOLVER_ERROR = "solver_error"
FAILURE_CATEGORIES = (NO_SWITCH, INFEASIBLE_SWEEP, SOLVER_ERROR)


@dataclass(frozen=True)
class SamplerConfig:
    """Settings for one ensemble run.

    ``coefficient_range`` is the half-open interval ``(low, high]``.
    ``max_support`` and ``glucose_levels`` left as ``None`` resolve to the
    reaction count and the model's default glucose grid.
    """

    seed: int = 0
    samples: int = 1000
    max_support: Optional[int] = None
    coefficient_range: Tuple[float, float] = (0.0, 1.0)
    allow_negative: bool = False
    glucose_levels: Optional[Tuple[float, ...]] = None
    delta: float = 0.0

    def problems(self, model: Optional[MetabolicModel] = None) -> List[str]:
        out = []
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            out.append("seed must be an integer in [0, 2**64)")
        if isinstance(self.samples, bool) or not isinstance(self.samples, int) or self.samples < 0:
            out.append("samples must be a nonnegative integer")
        lo, hi = self.coefficient_range
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            out.append("coefficient_range must be a finite interval (low, high] with low < high")
        if not (self.delta >= 0 and math.isfinite(self.delta)):
            out.append("delta must be a finite nonnegative number")
        if self.glucose_levels is not None:
            levels = list(self.glucose_levels)
            if any(not (g > 0 and math.isfinite(g)) for g in levels):
                out.append("glucose levels must be positive")
            elif any(b <= a for a, b in zip(levels, levels[1:])):
                out.append("glucose levels must be strictly increasing")
        if self.max_support is not None:
            limit = len(model.reactions) if model is not None else None
            if self.max_support < 1 or (limit is not None and self.max_support > limit):
                out.append(f"max_support must lie in [1, {limit if limit is not None else 'reactions'}]")
        if model is not None and not model.reactions:
            out.append("model has no reactions to sample")
        return out

    def resolved(self, model: MetabolicModel) -> "SamplerConfig":
        """Copy with defaults filled in from ``model``; raises ValueError if invalid."""
        problems = self.problems(model)
        if problems:
            raise ValueError("; ".join(problems))
        levels = self.glucose_levels
        if levels is None:
            levels = default_glucose_levels(model)
        return replace(self,
                       max_support=self.max_support or len(model.reactions),
                       coefficient_range=tuple(float(x) for x in self.coefficient_range),
                       glucose_levels=tuple(float(g) for g in levels),
                       delta=float(self.delta))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["coefficient_range"] = list(self.coefficient_range)
        d["glucose_levels"] = None if self.glucose_levels is None else list(self.glucose_levels)
        return d


def sample_stream(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def sample_objective(rng: np.random.Generator, model: MetabolicModel,
                     config: SamplerConfig, label: str = "") -> ObjectiveFunction:
    """Draw a support size, a support and one coefficient per supported reaction.

    Terms are listed in model reaction order.
    """
    n = len(model.reactions)
    max_support = config.max_support or n
    k = int(rng.integers(1, max_support + 1))
    chosen = np.sort(rng.choice(n, size=k, replace=False))
    lo, hi = config.coefficient_range
    terms = {}
    for j in chosen:
        coef = hi - rng.random() * (hi - lo)  # lands in (lo, hi]
        if config.allow_negative and rng.random() < 0.5:
            coef = -coef
        terms[model.reactions[j].id] = float(coef)
    return ObjectiveFunction(terms, label)


@dataclass
class SampleOutcome:
    index: int
    category: str
    objective: Optional[ObjectiveFunction] = None
    verdict: Optional[SwitchVerdict] = None


def evaluate_sample(model: MetabolicModel, config: SamplerConfig, index: int) -> SampleOutcome:
    """Draw sample ``index`` and classify it. ``config`` must be resolved."""
    objective = sample_objective(sample_stream(config.seed, index), model, config, f"sample-{index}")
    try:
        sweep = growth_sweep(model, objective, config.glucose_levels)
    except SweepDegenerateError:
        return SampleOutcome(index, INFEASIBLE_SWEEP)
    except (ArithmeticError, ValueError, np.linalg.LinAlgError):
        return SampleOutcome(index, SOLVER_ERROR)
    if any(p.status == ITERATION_LIMIT for p in sweep.points):
        return SampleOutcome(index, SOLVER_ERROR)
    verdict = detect_switch(sweep, config.delta)
    if verdict.switched:
        return SampleOutcome(index, SWITCH, objective, verdict)
    return SampleOutcome(index, NO_SWITCH)


@dataclass
class EnsembleReport:
    config: SamplerConfig
    total: int
    successes: List[SampleOutcome]
    outcomes: List[str]
    failures: Dict[str, int]
    support_counts: Dict[str, int] = field(default_factory=dict)

    @property
    def success_count(self) -> int:
        return len(self.successes)

    @property
    def frequencies_empty(self) -> bool:
        return self.success_count == 0

    @property
    def frequencies(self) -> Dict[str, float]:
        """Share of successful objectives whose support contains each reaction.

        Reactions never seen in a successful support are absent; the map is
        empty when there are no successes.
        """
        if not self.successes:
            return {}
        return {rid: count / self.success_count for rid, count in self.support_counts.items()}

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "total": self.total,
            "success_count": self.success_count,
            "failures": {k: self.failures[k] for k in FAILURE_CATEGORIES},
            "frequencies_empty": self.frequencies_empty,
            "successes": [
                {"index": s.index, "terms": s.objective.terms,
                 "margin_low": s.verdict.margin_low, "margin_high": s.verdict.margin_high}
                for s in self.successes
            ],
            "frequencies": reaction_frequencies(self),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def _run_chunk(args):
    model, config, start, stop = args
    return [evaluate_sample(model, config, i) for i in range(start, stop)]


def _chunks(total: int, workers: int) -> List[Tuple[int, int]]:
    size = max(1, min(500, math.ceil(total / (4 * workers))))
    return [(s, min(s + size, total)) for s in range(0, total, size)]


def aggregate(model: MetabolicModel, config: SamplerConfig,
              outcomes: Sequence[SampleOutcome]) -> EnsembleReport:
    outcomes = sorted(outcomes, key=lambda o: o.index)
    successes = [o for o in outcomes if o.category == SWITCH]
    failures = Counter(o.category for o in outcomes if o.category != SWITCH)
    counts: Counter = Counter()
    for s in successes:
        counts.update(s.objective.support)
    order = model.reaction_index
    support_counts = {rid: counts[rid] for rid in sorted(counts, key=order.__getitem__)}
    return EnsembleReport(config, len(outcomes), successes, [o.category for o in outcomes],
                          {k: failures.get(k, 0) for k in FAILURE_CATEGORIES}, support_counts)


def run_ensemble(model: MetabolicModel, config: SamplerConfig, workers: int = 1) -> EnsembleReport:
    """Sample ``config.samples`` objectives and keep those that switch.

    ``workers > 1`` spreads chunks of sample indices over a process pool;
    the report is identical for any worker count.
    """
    config = config.resolved(model)
    if workers < 1:
        raise ValueError("workers must be at least 1")
    total = config.samples
    if workers == 1 or total < 2:
        outcomes = [evaluate_sample(model, config, i) for i in range(total)]
    else:
        jobs = [(model, config, a, b) for a, b in _chunks(total, workers)]
        outcomes = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_run_chunk, jobs):
                outcomes.extend(part)
    return aggregate(model, config, outcomes)


def reaction_frequencies(report: EnsembleReport) -> List[Tuple[str, float]]:
    """(reaction id, frequency) sorted by descending frequency, then id."""
    return sorted(report.frequencies.items(), key=lambda kv: (-kv[1], kv[0]))


def default_workers() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)
