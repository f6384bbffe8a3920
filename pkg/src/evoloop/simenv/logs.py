"""Synthetic interaction logs with a hidden satisfaction column.

Every observable signal is a noisy view of a per-row latent satisfaction
draw; the link coefficients live in SimSpec so experiments are
reproducible and oracles can recompute ground truth. The latent column is
carried outside the visible schema: query results, prompts, and journal
records can never reference it.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

LOG_COLUMNS = (
    "user_id",
    "item_id",
    "click",
    "watch_time",
    "dwell_time",
    "survey_score",
    "channel_affinity",
    "quality_score",
)

LATENT_COLUMN = "latent_satisfaction"
SURVEY_RATE = 0.02


@dataclass(frozen=True)
class SimSpec:
    a_click: float = 1.0
    a_watch: float = 0.8
    a_dwell: float = 1.2
    a_survey: float = 1.5
    a_affinity: float = 1.0
    a_quality: float = 0.6
    noise_watch: float = 0.8
    noise_dwell: float = 0.5
    noise_survey: float = 0.5
    noise_affinity: float = 1.5
    noise_quality: float = 2.0
    n_rows: int = 100_000
    seed: int = 0
    # online-metric parameters
    delay_ticks: int = 7
    noise_sigma: float = 0.003
    traffic_fraction: float = 0.33

    def to_json(self) -> dict:
        return asdict(self)


class LogTable:
    """Columnar table of observable signals plus the oracle-only latent.

    ``columns`` is the visible schema; the latent array is reachable only
    through :meth:`latent_values`, which query execution never calls.
    """

    def __init__(self, columns: dict[str, np.ndarray], latent: np.ndarray,
                 spec: SimSpec | None = None):
        self.columns = columns
        self._latent = latent
        self.spec = spec

    def __len__(self) -> int:
        return len(self._latent)

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(self.columns)

    def latent_values(self) -> np.ndarray:
        """Oracle/simulator access only; never expose through queries."""
        return self._latent


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def gen_interaction_logs(spec: SimSpec) -> LogTable:
    """Draw rows per the link functions; deterministic per spec.seed."""
    rng = np.random.default_rng(spec.seed)
    n = spec.n_rows
    s = rng.normal(size=n)

    click = (rng.random(n) < _sigmoid(spec.a_click * s)).astype(np.float64)
    watch_time = np.exp(spec.a_watch * s + rng.normal(scale=spec.noise_watch, size=n))
    dwell_time = np.exp(spec.a_dwell * s + rng.normal(scale=spec.noise_dwell, size=n))

    survey = np.clip(3.0 + spec.a_survey * s
                     + rng.normal(scale=spec.noise_survey, size=n), 1.0, 5.0)
    observed = rng.random(n) < SURVEY_RATE
    survey = np.where(observed, survey, np.nan)

    affinity = _sigmoid(spec.a_affinity * s
                        + rng.normal(scale=spec.noise_affinity, size=n))
    quality = _sigmoid(spec.a_quality * s
                       + rng.normal(scale=spec.noise_quality, size=n))

    columns = {
        "user_id": rng.integers(0, max(n // 10, 1), size=n).astype(np.float64),
        "item_id": rng.integers(0, max(n // 5, 1), size=n).astype(np.float64),
        "click": click,
        "watch_time": watch_time,
        "dwell_time": dwell_time,
        "survey_score": survey,
        "channel_affinity": affinity,
        "quality_score": quality,
    }
    return LogTable(columns, latent=s, spec=spec)


def save_logs(table: LogTable, directory: str | Path) -> None:
    """Persist visible columns as CSV with a manifest sidecar; the latent
    column goes to a separate oracle-only file."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = list(table.columns)
    with open(directory / "logs.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for i in range(len(table)):
            writer.writerow(
                ["" if np.isnan(table.columns[c][i]) else repr(float(table.columns[c][i]))
                 for c in names]
            )
    with open(directory / "latent_oracle_only.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([LATENT_COLUMN])
        for v in table.latent_values():
            writer.writerow([repr(float(v))])
    manifest = {
        "schema": names,
        "n_rows": len(table),
        "sim_spec": table.spec.to_json() if table.spec else None,
        "note": ("online metric semantics are an artifact of this simulator; "
                 "metric1 tracks correlation with the latent satisfaction "
                 "column stored in latent_oracle_only.csv"),
    }
    with open(directory / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)


def load_logs(directory: str | Path) -> LogTable:
    directory = Path(directory)
    with open(directory / "manifest.json") as fh:
        manifest = json.load(fh)
    spec = SimSpec(**manifest["sim_spec"]) if manifest.get("sim_spec") else None
    columns: dict[str, list[float]] = {c: [] for c in manifest["schema"]}
    with open(directory / "logs.csv", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        for row in reader:
            for c, v in zip(header, row):
                columns[c].append(float(v) if v else np.nan)
    latent = []
    with open(directory / "latent_oracle_only.csv", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            latent.append(float(row[0]))
    arrays = {c: np.array(v) for c, v in columns.items()}
    return LogTable(arrays, latent=np.array(latent), spec=spec)
