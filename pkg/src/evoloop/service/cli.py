"""Command-line entry points.

Local commands (env gen, inner run, ablation run, oracle grid, journal
show) run in-process; trial/queue/steering commands are thin clients of a
running service so that every mutation has exactly one implementation, the
HTTP route. All options can be supplied as environment variables with the
EVOLOOP_ prefix (for example EVOLOOP_OUTER_SERVE_PORT).
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from evoloop.agents import (
    InnerLoopRun,
    Orchestrator,
    OuterConfig,
    PersonaTooling,
    promote_top_k,
    run_inner_loop,
)
from evoloop.bench import AblationVariant, oracle_grid_search, run_ablation
from evoloop.configspace import (
    ArchSpec,
    Block,
    Config,
    OptimizerSpec,
    RewardSpec,
    RewardTerm,
    TrainingSpec,
    serialize_config,
    to_flat,
)
from evoloop.journal import Journal
from evoloop.proposer import ProviderConfig, default_persona, make_provider
from evoloop.journal import ContextStrategy
from evoloop.simenv import SimSpec, gen_interaction_logs, latent_correlation, save_logs
from evoloop import search_space

# Mutating CLI commands and the API routes they call (kept in lockstep; the
# parity test asserts both directions).
MUTATION_PARITY = {
    "trial submit": "POST /trials",
    "trial abort": "POST /trials/{id}/abort",
    "queue reorder": "POST /queue/reorder",
    "steering add": "POST /steering",
}

DEFAULT_URL = "http://127.0.0.1:8321"


def default_baseline(seed: int = 0) -> Config:
    return Config(
        optimizer=OptimizerSpec(kind="adagrad", learning_rate=0.1,
                                epsilon=1e-8),
        architecture=ArchSpec((Block("dense", 8, "relu"),)),
        reward=RewardSpec((RewardTerm("click", 1.0),)),
        training=TrainingSpec(batch_size=32, epochs=4, seed=seed),
    )


def _client(url: str):
    import httpx

    headers = {}
    token = os.environ.get("EVOLOOP_API_TOKEN", "")
    if token:
        headers["Authorization"] = f"Bearer {token}"
    return httpx.Client(base_url=url, headers=headers, timeout=10.0)


def _echo_response(resp, as_json: bool) -> None:
    try:
        body = resp.json()
    except ValueError:
        body = {"code": "bad_response", "message": resp.text}
    if as_json:
        click.echo(json.dumps(body))
    elif resp.is_success:
        click.echo(json.dumps(body, indent=2))
    if not resp.is_success:
        raise click.ClickException(
            f"{body.get('code', resp.status_code)}: "
            f"{body.get('message', resp.text)}")


@click.group()
def main():
    """Self-evolving model optimization loops."""


# -- env ----------------------------------------------------------------


@main.group()
def env():
    """Build simulation environments."""


@env.command("gen")
@click.option("--out", type=click.Path(), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--rows", type=int, default=100_000, show_default=True)
def env_gen(out, seed, rows):
    """Generate benchmark datasets and interaction logs under OUT."""
    from evoloop.simenv import gen_supervised_dataset, DATASET_NAMES

    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    for name in DATASET_NAMES:
        ds = gen_supervised_dataset(name, seed)
        np.savez(out / f"{name}.npz", X=ds.X, y=ds.y)
        click.echo(f"wrote {name}.npz ({len(ds)} rows)")
    logs = gen_interaction_logs(SimSpec(seed=seed, n_rows=rows))
    save_logs(logs, out / "logs")
    click.echo(f"wrote logs/ ({len(logs)} rows)")


# -- inner loop ----------------------------------------------------------


@main.group()
def inner():
    """Offline search loops."""


@inner.command("run")
@click.option("--persona", type=click.Choice(["optimizer", "architecture",
                                              "reward"]), default="optimizer",
              show_default=True)
@click.option("--provider", "provider_kind",
              type=click.Choice(["heuristic", "scripted", "http"]),
              default="heuristic", show_default=True)
@click.option("--replay", type=click.Path(exists=True), default=None,
              help="Replay file for the scripted provider.")
@click.option("--endpoint", default="", help="HTTP provider endpoint.")
@click.option("--rounds", type=int, default=7, show_default=True)
@click.option("--per-round", type=int, default=10, show_default=True)
@click.option("--context", default="full_sorted", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--benchmark", default=None,
              help="Override the persona's benchmark dataset.")
@click.option("--artifact-dir", type=click.Path(), default=None)
@click.option("--promote-k", type=int, default=1, show_default=True)
@click.option("--optimize-cost", is_flag=True)
@click.option("--json", "as_json", is_flag=True)
def inner_run(persona, provider_kind, replay, endpoint, rounds, per_round,
              context, seed, benchmark, artifact_dir, promote_k,
              optimize_cost, as_json):
    """Run propose-lint-score rounds and print the ranking."""
    provider = make_provider(ProviderConfig(
        provider_kind, endpoint=endpoint, replay_path=replay or ""))
    spec = default_persona(persona, optimize_cost=optimize_cost)
    baseline = default_baseline(seed)
    tooling = PersonaTooling(persona, seed=seed, benchmark=benchmark)
    run = InnerLoopRun(
        persona=spec, baseline=baseline, rounds=rounds,
        proposals_per_round=per_round, promotion_k=promote_k,
        context_strategy=ContextStrategy.parse(context), seed=seed,
        artifact_dir=artifact_dir)
    ranked = run_inner_loop(run, provider, tooling=tooling)
    manifests = promote_top_k(ranked, promote_k)
    if as_json:
        click.echo(json.dumps({
            "score_kind": ranked.score_kind,
            "baseline_score": ranked.baseline_score.to_json(),
            "baseline_margin": ranked.baseline_margin,
            "candidates": [c.to_json() for c in ranked.candidates],
            "promoted": [m.to_json() for m in manifests],
        }))
        return
    click.echo(f"baseline {ranked.score_kind}: "
               f"{ranked.baseline_score.value:.6g} "
               f"(margin {ranked.baseline_margin:.3g})")
    for i, c in enumerate(ranked.candidates[:10]):
        click.echo(f"{i + 1:2d}. {c.score.value:<12.6g} "
                   f"[{c.proposal.category}] "
                   f"{c.proposal.diff.to_json_text()}")
    click.echo(f"promoted: {len(manifests)}")


# -- outer loop / service --------------------------------------------------


@main.group()
def outer():
    """Orchestrator service."""


@outer.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8321, show_default=True)
@click.option("--tick-interval", type=float, default=1.0, show_default=True)
@click.option("--state-dir", type=click.Path(), default="outer-state",
              show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--auth-token-env", default="EVOLOOP_API_TOKEN",
              show_default=True)
@click.option("--recover/--no-recover", default=True, show_default=True,
              help="Resume from an existing state directory.")
def outer_serve(host, port, tick_interval, state_dir, seed, auth_token_env,
                recover):
    """Start the orchestrator and its HTTP API."""
    from evoloop.agents import recover_orchestrator
    from .api import serve

    config = OuterConfig(seed=seed)
    state = Path(state_dir)
    if recover and (state / "events.jsonl").exists():
        orch = recover_orchestrator(default_baseline(seed), state, config)
        click.echo(f"recovered {len(orch.trials)} trial(s) "
                   f"at tick {orch.tick_count}")
    else:
        orch = Orchestrator(default_baseline(seed), config, state_dir=state)
    click.echo(f"serving on http://{host}:{port} "
               f"(tick every {tick_interval}s)")
    serve(orch, host=host, port=port, tick_interval=tick_interval,
          token_env=auth_token_env)


# -- journal ----------------------------------------------------------------


@main.group()
def journal():
    """Experiment journal."""


@journal.command("show")
@click.option("--path", type=click.Path(exists=True), required=True)
@click.option("--json", "as_json", is_flag=True)
def journal_show(path, as_json):
    """Print journal records in append order."""
    j = Journal(path)
    if as_json:
        click.echo(json.dumps([r.to_json() for r in j.read_all()]))
        return
    for r in j.read_all():
        online = "" if r.online_metrics is None else (
            f" metric1={r.online_metrics.get('metric1', 0.0):+.5f}")
        click.echo(f"{r.trial_id} [{r.status}] {r.persona_kind} "
                   f"{r.score_kind}={r.score_value:.6g}"
                   f" cost={r.cost_units:.0f}{online}")


# -- ablation ----------------------------------------------------------------


@main.group()
def ablation():
    """Context-strategy ablation studies."""


@ablation.command("run")
@click.option("--benchmark", default="illcond-100", show_default=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--runs", type=int, default=6, show_default=True)
@click.option("--ideas", type=int, default=70, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def ablation_run(benchmark, out, seed, runs, ideas, as_json):
    """Compare journal-context strategies with the heuristic provider."""
    variants = [
        AblationVariant("full_sorted", context_strategy="full_sorted",
                        runs=runs, ideas_per_run=ideas),
        AblationVariant("top_5", context_strategy="top_5",
                        runs=runs, ideas_per_run=ideas),
        AblationVariant("no_context", context_strategy="none",
                        runs=runs, ideas_per_run=ideas),
    ]
    report = run_ablation(variants, benchmark, default_baseline(seed),
                          seed=seed, out_dir=out)
    if as_json:
        click.echo(json.dumps({
            name: {"mean_z": report.mean_z(name),
                   "std_z": report.std_z(name),
                   "best_losses": report.best_losses[name]}
            for name in report.variants}))
        return
    for name in report.variants:
        click.echo(f"{name:16s} mean_z={report.mean_z(name):+.4f} "
                   f"std_z={report.std_z(name):.4f}")
    click.echo(f"report written to {out}")


# -- oracle ----------------------------------------------------------------


@main.group()
def oracle():
    """Brute-force grid oracles."""


@oracle.command("grid")
@click.option("--persona", type=click.Choice(["optimizer", "architecture",
                                              "reward", "efficiency"]),
              default="optimizer", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--cache", type=click.Path(), default=None)
@click.option("--refresh", is_flag=True)
@click.option("--json", "as_json", is_flag=True)
def oracle_grid(persona, seed, cache, refresh, as_json):
    """Exhaustively score the persona's mutation grid."""
    baseline = default_baseline(seed)
    maximize = False
    if persona == "optimizer":
        grid = [Config(spec, baseline.architecture, baseline.reward,
                       baseline.training)
                for spec in search_space.optimizer_grid()]
        tooling = PersonaTooling("optimizer", seed=seed)
        score_fn = lambda c: tooling.score(c).value  # noqa: E731
    elif persona == "architecture":
        grid = [Config(baseline.optimizer, arch, baseline.reward,
                       baseline.training)
                for arch in search_space.architecture_grid()]
        tooling = PersonaTooling("architecture", seed=seed)
        score_fn = lambda c: tooling.score(c).value  # noqa: E731
    elif persona == "efficiency":
        grid = search_space.efficiency_grid(baseline)
        tooling = PersonaTooling("optimizer", seed=seed)
        score_fn = lambda c: tooling.score(c).value  # noqa: E731
    else:
        grid = [Config(baseline.optimizer, baseline.architecture, spec,
                       baseline.training)
                for spec in search_space.reward_grid()]
        logs = gen_interaction_logs(SimSpec(seed=seed))
        score_fn = lambda c: latent_correlation(c.reward, logs)  # noqa: E731
        maximize = True
    result = oracle_grid_search(grid, score_fn, maximize=maximize,
                                context=f"{persona}|seed={seed}",
                                cache_path=cache, refresh=refresh)
    if as_json:
        click.echo(json.dumps({
            "persona": persona,
            "best_value": result.best_value,
            "best_config": dict(to_flat(result.best_config)),
            "grid_size": len(result.values),
            "from_cache": result.from_cache,
        }))
        return
    click.echo(f"grid size: {len(result.values)}")
    click.echo(f"best value: {result.best_value:.6g}")
    click.echo(serialize_config(result.best_config))


# -- API clients -------------------------------------------------------------


@main.group()
def trial():
    """Trials on a running service."""


@trial.command("submit")
@click.option("--url", default=DEFAULT_URL, show_default=True)
@click.option("--manifest", "manifest_path", type=click.Path(exists=True),
              required=True, help="JSON file with diff/source/persona_kind.")
@click.option("--json", "as_json", is_flag=True)
def trial_submit(url, manifest_path, as_json):
    """POST /trials."""
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    with _client(url) as client:
        _echo_response(client.post("/trials", json=manifest), as_json)


@trial.command("abort")
@click.argument("trial_id")
@click.option("--url", default=DEFAULT_URL, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def trial_abort(trial_id, url, as_json):
    """POST /trials/{id}/abort."""
    with _client(url) as client:
        _echo_response(client.post(f"/trials/{trial_id}/abort"), as_json)


@trial.command("show")
@click.argument("trial_id")
@click.option("--url", default=DEFAULT_URL, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def trial_show(trial_id, url, as_json):
    """GET /trials/{id}."""
    with _client(url) as client:
        _echo_response(client.get(f"/trials/{trial_id}"), as_json)


@main.group()
def queue():
    """Trial queue on a running service."""


@queue.command("reorder")
@click.argument("trial_ids", nargs=-1, required=True)
@click.option("--url", default=DEFAULT_URL, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def queue_reorder(trial_ids, url, as_json):
    """POST /queue/reorder."""
    with _client(url) as client:
        _echo_response(client.post("/queue/reorder",
                                   json={"order": list(trial_ids)}), as_json)


@main.group()
def steering():
    """Steering instructions for proposal prompts."""


@steering.command("add")
@click.option("--persona", type=click.Choice(["optimizer", "architecture",
                                              "reward"]), required=True)
@click.option("--text", required=True)
@click.option("--url", default=DEFAULT_URL, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def steering_add(persona, text, url, as_json):
    """POST /steering."""
    with _client(url) as client:
        _echo_response(client.post("/steering",
                                   json={"persona_kind": persona,
                                         "text": text}), as_json)


def entrypoint():
    main(auto_envvar_prefix="EVOLOOP")


if __name__ == "__main__":
    sys.exit(entrypoint())
