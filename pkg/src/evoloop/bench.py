"""Search-quality benchmarking: ablation runs and brute-force oracles.

The ablation harness compares context-rendering variants by running
independent inner loops and normalizing each run's best loss as a z-score.
Pooling decision: z-scores are computed within each run index, pooling all
variants' scored losses for that run, so variants stay comparable per run.
That decision is printed in the report header.

The grid oracle exhaustively scores a finite mutation grid with a caller
supplied scoring function and caches the result under a content hash of
(grid, scoring context); a cache that no longer matches its hash is
refused, never silently reused.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from evoloop.configspace import Config, to_flat
from evoloop.journal import ContextStrategy
from evoloop.proposer import ProviderConfig, default_persona, make_provider
from .agents import InnerLoopRun, PersonaTooling, run_inner_loop


class StaleCacheError(RuntimeError):
    """Cached oracle result does not match the requested grid."""


def zscore_normalize(values: list[float]) -> list[float]:
    """Population z-scores; a zero-variance input yields zeros, with a
    warning, rather than dividing by zero."""
    if len(values) < 2:
        raise ValueError("need at least 2 values to normalize")
    arr = np.asarray(values, dtype=np.float64)
    std = float(arr.std())
    if std == 0.0:
        warnings.warn("zero variance input; z-scores set to 0", stacklevel=2)
        return [0.0] * len(values)
    mean = float(arr.mean())
    return [float((v - mean) / std) for v in arr]


@dataclass(frozen=True)
class AblationVariant:
    name: str
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    context_strategy: str = "full_sorted"
    framing: bool = True
    runs: int = 6
    ideas_per_run: int = 70


@dataclass
class AblationReport:
    variants: list[str]
    best_losses: dict  # name -> list of per-run best losses
    zscores: dict      # name -> list of per-run z values
    excluded: list     # (variant, run, reason)

    def mean_z(self, name: str) -> float:
        zs = self.zscores[name]
        return float(np.mean(zs)) if zs else math.nan

    def std_z(self, name: str) -> float:
        zs = self.zscores[name]
        return float(np.std(zs)) if zs else math.nan

    def write(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        with open(directory / "ablation_report.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["variant", "run", "best_loss", "z"])
            for name in self.variants:
                for run, (loss, z) in enumerate(
                        zip(self.best_losses[name], self.zscores[name])):
                    writer.writerow([name, run, repr(loss), repr(z)])
        with open(directory / "ablation_summary.txt", "w") as fh:
            fh.write("Ablation summary\n")
            fh.write("Pooling decision: z-scores are computed per run index,"
                     " pooling all variants' scored losses for that run.\n")
            fh.write("Lower (more negative) mean z is better.\n\n")
            fh.write(f"{'variant':24s} {'mean_z':>10s} {'std_z':>10s}\n")
            for name in self.variants:
                fh.write(f"{name:24s} {self.mean_z(name):>10.4f} "
                         f"{self.std_z(name):>10.4f}\n")
            for name, run, reason in self.excluded:
                fh.write(f"excluded: {name} run {run}: {reason}\n")


def run_ablation(variants: list[AblationVariant], benchmark: str,
                 baseline: Config, seed: int = 0,
                 proposals_per_round: int = 10,
                 out_dir: str | Path | None = None) -> AblationReport:
    """Run every variant ``runs`` times and z-normalize per run index."""
    runs = max(v.runs for v in variants)
    per_run_losses: dict[str, list[float]] = {v.name: [] for v in variants}
    all_scored: dict[tuple[str, int], list[float]] = {}
    excluded = []

    for variant in variants:
        per_round = proposals_per_round
        n_rounds = max(1, variant.ideas_per_run // per_round)
        for run_index in range(variant.runs):
            provider = make_provider(variant.provider)
            tooling = PersonaTooling("optimizer", seed=seed,
                                     benchmark=benchmark)
            persona = default_persona("optimizer", framing=variant.framing)
            run = InnerLoopRun(
                persona=persona,
                baseline=baseline,
                rounds=n_rounds,
                proposals_per_round=per_round,
                context_strategy=ContextStrategy.parse(
                    variant.context_strategy),
                seed=seed * 1000 + run_index,
            )
            try:
                ranked = run_inner_loop(run, provider, tooling=tooling)
            except Exception as exc:  # noqa: BLE001 - per-run exclusion
                excluded.append((variant.name, run_index, str(exc)))
                per_run_losses[variant.name].append(math.nan)
                continue
            losses = [c.score.value for c in ranked.candidates
                      if c.disposition == "scored"
                      and math.isfinite(c.score.value)]
            if not losses:
                excluded.append((variant.name, run_index, "no scored ideas"))
                per_run_losses[variant.name].append(math.nan)
                continue
            per_run_losses[variant.name].append(min(losses))
            all_scored[(variant.name, run_index)] = losses

    zscores: dict[str, list[float]] = {v.name: [] for v in variants}
    for run_index in range(runs):
        pool: list[float] = []
        for variant in variants:
            pool.extend(all_scored.get((variant.name, run_index), []))
        if len(pool) < 2:
            continue
        mean = float(np.mean(pool))
        std = float(np.std(pool))
        for variant in variants:
            if run_index >= len(per_run_losses[variant.name]):
                continue
            best = per_run_losses[variant.name][run_index]
            if math.isnan(best):
                continue
            z = 0.0 if std == 0.0 else (best - mean) / std
            zscores[variant.name].append(z)

    report = AblationReport(
        variants=[v.name for v in variants],
        best_losses=per_run_losses,
        zscores=zscores,
        excluded=excluded,
    )
    if out_dir:
        report.write(out_dir)
    return report


@dataclass
class OracleResult:
    best_config: Config
    best_value: float
    values: list[float]
    grid_hash: str
    from_cache: bool = False


def grid_hash(configs: list[Config], context: str) -> str:
    payload = json.dumps(
        [sorted(to_flat(c).items()) for c in configs], default=str
    ) + "|" + context
    return hashlib.sha256(payload.encode()).hexdigest()


def oracle_grid_search(configs: list[Config], score_fn, maximize: bool = False,
                       context: str = "", cache_path: str | Path | None = None,
                       refresh: bool = False) -> OracleResult:
    """Exhaustively score every grid point; argmin (or argmax) wins.

    When ``cache_path`` is given, a previous result is reused only if its
    content hash matches the requested grid; a mismatched cache raises
    StaleCacheError unless ``refresh`` forces recomputation.
    """
    if not configs:
        raise ValueError("empty grid")
    digest = grid_hash(configs, context)
    cache_path = Path(cache_path) if cache_path else None
    if cache_path and cache_path.exists():
        with open(cache_path) as fh:
            cached = json.load(fh)
        if cached.get("grid_hash") == digest:
            index = cached["best_index"]
            return OracleResult(configs[index], cached["best_value"],
                                cached["values"], digest, from_cache=True)
        if not refresh:
            raise StaleCacheError(
                f"cache at {cache_path} was built for a different grid")

    values = [float(score_fn(c)) for c in configs]
    finite = [(v if math.isfinite(v) else
               (-math.inf if maximize else math.inf)) for v in values]
    index = (max if maximize else min)(range(len(configs)),
                                       key=lambda i: finite[i])
    result = OracleResult(configs[index], values[index], values, digest)
    if cache_path:
        cache_path.parent.mkdir(parents=True, exist_ok=True)
        with open(cache_path, "w") as fh:
            json.dump({"grid_hash": digest, "best_index": index,
                       "best_value": result.best_value, "values": values},
                      fh)
    return result
