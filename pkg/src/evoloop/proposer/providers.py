"""Proposal providers: where raw proposal text comes from.

Three interchangeable sources behind one ``complete(prompt, n, seed)``
interface:

- HttpLLMProvider posts the prompt to a text-completion endpoint.
- ScriptedProvider replays canned responses from a JSONL file, for
  reproducible runs and tests.
- HeuristicProvider is a deterministic stand-in policy. It reads the same
  prompt an LLM would receive, reconstructs the baseline and the visible
  experiment history from the CONTEXT section, and proposes mutations over
  the shared search grids: explore picks untried grid points near the best
  known config, exploit perturbs a numeric field of the best config by at
  most 20 percent, innovate makes a structural change. Because it only sees
  what the prompt shows it, context-strategy ablations act on it the same
  way they would on a live model.

Responses can be logged verbatim (never including auth tokens) so a live
session can later be replayed through ScriptedProvider.
"""

from __future__ import annotations

import json
import math
import os
import random
import re
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

from evoloop import search_space
from evoloop.configspace import (
    ArchSpec,
    Block,
    Config,
    ConfigError,
    Diff,
    DiffOp,
    OptimizerSpec,
    RewardSpec,
    RewardTerm,
    apply_diff,
    diff_configs,
    parse_config,
    to_flat,
)
from .prompt import BASELINE_HEADER, HISTORY_HEADER


class ProviderError(RuntimeError):
    """Provider could not produce a response (network, exhausted replay)."""


@dataclass
class ProviderConfig:
    kind: str = "heuristic"  # heuristic | scripted | http
    endpoint: str = ""
    auth_token_env: str = "EVOLOOP_PROVIDER_TOKEN"
    replay_path: str = ""
    log_path: str = ""
    timeout: float = 30.0
    max_retries: int = 2
    max_tokens: int = 4096


class _LoggingMixin:
    log_path: str = ""

    def _log(self, prompt: str, text: str) -> None:
        if not self.log_path:
            return
        entry = {"ts": time.time(), "prompt_chars": len(prompt), "text": text}
        with open(self.log_path, "a") as fh:
            fh.write(json.dumps(entry) + "\n")


class ScriptedProvider(_LoggingMixin):
    """Replays responses in order from a JSONL file of {"text": ...} rows."""

    def __init__(self, replay_path: str | Path, log_path: str = ""):
        self.log_path = log_path
        self._responses: list[str] = []
        with open(replay_path) as fh:
            for line in fh:
                if line.strip():
                    self._responses.append(json.loads(line)["text"])
        self._cursor = 0

    def complete(self, prompt: str, n: int, seed: int) -> str:
        if self._cursor >= len(self._responses):
            raise ProviderError(
                f"replay exhausted after {len(self._responses)} responses")
        text = self._responses[self._cursor]
        self._cursor += 1
        self._log(prompt, text)
        return text


class HttpLLMProvider(_LoggingMixin):
    """POSTs {"prompt", "max_tokens"} as JSON; expects {"text": ...} back."""

    def __init__(self, endpoint: str, auth_token_env: str = "EVOLOOP_PROVIDER_TOKEN",
                 timeout: float = 30.0, max_retries: int = 2,
                 max_tokens: int = 4096, log_path: str = ""):
        self.endpoint = endpoint
        self.auth_token_env = auth_token_env
        self.timeout = timeout
        self.max_retries = max_retries
        self.max_tokens = max_tokens
        self.log_path = log_path

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.auth_token_env, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def complete(self, prompt: str, n: int, seed: int) -> str:
        import httpx

        payload = {"prompt": prompt, "max_tokens": self.max_tokens}
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            try:
                resp = httpx.post(self.endpoint, json=payload,
                                  headers=self._headers(),
                                  timeout=self.timeout)
                resp.raise_for_status()
                text = resp.json()["text"]
                self._log(prompt, text)
                return text
            except Exception as exc:  # noqa: BLE001 - retried, then surfaced
                last_error = exc
                if attempt < self.max_retries:
                    time.sleep(0.2 * (attempt + 1))
        raise ProviderError(f"endpoint failed after "
                            f"{self.max_retries + 1} attempts: {last_error}")


# --- prompt introspection for the heuristic policy -------------------------

_QUOTA_RE = re.compile(r"make (\d+), (\d+), and (\d+) proposals")
_RECORD_RE = re.compile(r"^--- trial (\S+) \[(\w+)\] ---$")
_SCORE_RE = re.compile(r"^offline (proxy_loss|correlation): (\S+)$")


@dataclass
class _SeenTrial:
    config: Config
    score_kind: str
    score_value: float


@dataclass
class _PromptView:
    baseline: Config
    persona_kind: str
    quota: tuple[int, int, int]
    optimize_cost: bool
    trials: list[_SeenTrial] = field(default_factory=list)


def _parse_diff_lines(lines: list[str]) -> Diff:
    ops = []
    for line in lines:
        line = line.strip()
        if line.startswith("remove "):
            ops.append(DiffOp("remove", line[len("remove "):].strip()))
        elif line.startswith("set ") and " = " in line:
            rest = line[len("set "):]
            path, raw = rest.split(" = ", 1)
            value: object = raw.strip()
            try:
                value = int(value)
            except ValueError:
                try:
                    value = float(value)
                except ValueError:
                    pass
            ops.append(DiffOp("set", path.strip(), value))
    return Diff(tuple(ops))


def _parse_prompt(prompt: str) -> _PromptView:
    if BASELINE_HEADER not in prompt:
        raise ProviderError("prompt has no baseline configuration section")
    after = prompt.split(BASELINE_HEADER, 1)[1]
    baseline_part = after.split(HISTORY_HEADER, 1)[0]
    config_lines = [ln for ln in baseline_part.splitlines()
                    if " = " in ln and not ln.startswith(" ")]
    baseline = parse_config("\n".join(config_lines))

    if "reward definition" in prompt:
        persona_kind = "reward"
    elif "network architecture" in prompt:
        persona_kind = "architecture"
    else:
        persona_kind = "optimizer"

    m = _QUOTA_RE.search(prompt)
    quota = tuple(int(g) for g in m.groups()) if m else (3, 5, 2)
    optimize_cost = "Reduce training cost" in prompt

    view = _PromptView(baseline, persona_kind, quota, optimize_cost)

    if HISTORY_HEADER in prompt:
        history = prompt.split(HISTORY_HEADER, 1)[1]
        history = history.split("# OUTPUT FORMAT", 1)[0]
        block: list[str] = []
        blocks: list[list[str]] = []
        for line in history.splitlines():
            if _RECORD_RE.match(line):
                if block:
                    blocks.append(block)
                block = [line]
            elif block:
                block.append(line)
        if block:
            blocks.append(block)
        for lines in blocks:
            diff_lines = []
            score_kind, score_value = "", math.inf
            in_change = False
            for line in lines:
                if line == "change:":
                    in_change = True
                    continue
                sm = _SCORE_RE.match(line)
                if sm:
                    in_change = False
                    score_kind = sm.group(1)
                    score_value = float(sm.group(2))
                    continue
                if in_change and line.startswith("  "):
                    diff_lines.append(line)
            try:
                cfg = apply_diff(view.baseline, _parse_diff_lines(diff_lines))
            except ConfigError:
                continue
            view.trials.append(_SeenTrial(cfg, score_kind, score_value))
    return view


def _best_trial(view: _PromptView) -> Config:
    """Best-scoring visible config; the baseline when history is empty."""
    want = "correlation" if view.persona_kind == "reward" else "proxy_loss"
    scored = [t for t in view.trials
              if t.score_kind == want and math.isfinite(t.score_value)]
    if not scored:
        return view.baseline
    if want == "correlation":
        return max(scored, key=lambda t: t.score_value).config
    return min(scored, key=lambda t: t.score_value).config


def _signature(c: Config) -> tuple:
    return tuple(sorted(to_flat(c).items()))


class HeuristicProvider(_LoggingMixin):
    """Deterministic grid-mutation policy driving the proposal loop without
    a language model. All decisions derive from (prompt, seed)."""

    def __init__(self, log_path: str = ""):
        self.log_path = log_path

    def complete(self, prompt: str, n: int, seed: int) -> str:
        view = _parse_prompt(prompt)
        rng = random.Random(seed)
        counts = _category_counts(view.quota, n)
        best = _best_trial(view)
        tried = {_signature(t.config) for t in view.trials}
        tried.add(_signature(view.baseline))

        proposals = []
        for category in ("explore", "exploit", "innovate"):
            for _ in range(counts[category]):
                candidate = self._mutate(view, best, category, rng, tried)
                if candidate is None:
                    candidate = self._mutate(view, best, "exploit", rng, tried)
                if candidate is None:
                    continue
                tried.add(_signature(candidate))
                diff = diff_configs(view.baseline, candidate)
                if len(diff) == 0:
                    continue
                proposals.append({
                    "explanation": f"[{category}] {_describe(diff)}",
                    "diff": diff.to_json(),
                })
        text = json.dumps(proposals, indent=2)
        raw = "Here are my proposals.\n```json\n" + text + "\n```\n"
        self._log(prompt, raw)
        return raw

    def _mutate(self, view, best, category, rng, tried):
        if view.optimize_cost:
            return _mutate_efficiency(view, best, category, rng, tried)
        if view.persona_kind == "architecture":
            return _mutate_architecture(view, best, category, rng, tried)
        if view.persona_kind == "reward":
            return _mutate_reward(view, best, category, rng, tried)
        return _mutate_optimizer(view, best, category, rng, tried)


def _category_counts(quota: tuple[int, int, int], n: int) -> dict:
    total = sum(quota) or 1
    raw = [q * n / total for q in quota]
    counts = [int(v) for v in raw]
    remainders = sorted(range(3), key=lambda i: raw[i] - counts[i],
                        reverse=True)
    i = 0
    while sum(counts) < n:
        counts[remainders[i % 3]] += 1
        i += 1
    return dict(zip(("explore", "exploit", "innovate"), counts))


def _describe(diff: Diff) -> str:
    paths = sorted({op.path for op in diff.ops})
    return "adjust " + ", ".join(paths)


def _with_optimizer(c: Config, opt: OptimizerSpec) -> Config:
    return Config(opt, c.architecture, c.reward, c.training)


def _with_arch(c: Config, arch: ArchSpec) -> Config:
    return Config(c.optimizer, arch, c.reward, c.training)


def _with_reward(c: Config, reward: RewardSpec) -> Config:
    return Config(c.optimizer, c.architecture, reward, c.training)


def _opt_distance(a: OptimizerSpec, b: OptimizerSpec) -> float:
    d = abs(math.log10(a.learning_rate) - math.log10(b.learning_rate))
    if a.kind != b.kind:
        d += 1.0
    return d


def _untried(view, candidates, tried):
    out = []
    for cfg in candidates:
        if _signature(cfg) not in tried:
            out.append(cfg)
    return out


def _pick_near(pool, rng, key):
    """One of the three closest candidates under ``key``, at random."""
    ranked = sorted(pool, key=key)
    return rng.choice(ranked[:3])


def _mutate_optimizer(view, best, category, rng, tried):
    grid = [_with_optimizer(view.baseline, spec)
            for spec in search_space.optimizer_grid()]
    pool = _untried(view, grid, tried)
    if category == "explore" and pool:
        return _pick_near(pool, rng,
                          lambda c: _opt_distance(c.optimizer, best.optimizer))
    if category == "innovate":
        other = [c for c in pool if c.optimizer.kind != best.optimizer.kind]
        if other:
            return rng.choice(other)
        if pool:
            return rng.choice(pool)
        return None
    # exploit: scale one numeric field of the best config by at most 20%
    spec = best.optimizer
    fields = [f for f in ("learning_rate", "momentum", "decay")
              if getattr(spec, f) is not None]
    name = rng.choice(fields)
    factor = rng.uniform(0.8, 1.2)
    value = getattr(spec, name) * factor
    if name == "momentum":
        value = min(value, 0.99)
    elif name == "decay":
        value = min(max(value, 0.5), 0.999)
    return _with_optimizer(view.baseline, replace(spec, **{name: value}))


def _mutate_architecture(view, best, category, rng, tried):
    grid = [_with_arch(view.baseline, arch)
            for arch in search_space.architecture_grid()]
    pool = _untried(view, grid, tried)
    if category == "explore" and pool:
        return rng.choice(pool)
    if category == "innovate":
        gated = [c for c in pool
                 if any(b.kind in ("glu_gate", "layer_norm")
                        for b in c.architecture.blocks)]
        if gated:
            return rng.choice(gated)
        if pool:
            return rng.choice(pool)
        return None
    # exploit: resize a block of the best architecture by at most 20%
    blocks = list(best.architecture.blocks)
    sized = [i for i, b in enumerate(blocks) if b.units is not None]
    if not sized:
        return None
    i = rng.choice(sized)
    b = blocks[i]
    units = max(1, round(b.units * rng.uniform(0.8, 1.2)))
    if units == b.units:
        units = b.units + rng.choice((-1, 1))
        units = max(1, units)
    blocks[i] = Block(b.kind, units, b.activation)
    return _with_arch(view.baseline, ArchSpec(tuple(blocks)))


def _reward_weights(spec: RewardSpec) -> dict:
    return {t.signal: t.weight for t in spec.terms}


def _reward_from_weights(weights: dict) -> RewardSpec:
    terms = tuple(
        RewardTerm(s, w, search_space.REWARD_SIGNAL_TRANSFORMS.get(s, "identity"))
        for s, w in weights.items() if w != 0.0)
    return RewardSpec(terms)


def _mutate_reward(view, best, category, rng, tried):
    signals = list(search_space.REWARD_SIGNAL_TRANSFORMS)
    weights = {s: _reward_weights(best.reward).get(s, 0.0) for s in signals}
    levels = search_space.REWARD_WEIGHT_LEVELS
    if category in ("explore", "innovate"):
        # lattice neighbors of the best config: one signal moved one level
        neighbors = []
        for s in signals:
            idx = min(range(len(levels)),
                      key=lambda i: abs(levels[i] - weights[s]))
            for j in (idx - 1, idx + 1):
                if 0 <= j < len(levels):
                    w = dict(weights)
                    w[s] = levels[j]
                    if any(v != 0.0 for v in w.values()):
                        neighbors.append(w)
        if category == "innovate":
            # structural: bring in or drop a whole signal
            neighbors = [w for w in neighbors
                         if (w != weights) and
                         sum(v != 0.0 for v in w.values())
                         != sum(v != 0.0 for v in weights.values())]
        cfgs = _untried(view, [_with_reward(view.baseline,
                                            _reward_from_weights(w))
                               for w in neighbors], tried)
        if cfgs:
            return rng.choice(cfgs)
        pool = _untried(view, [_with_reward(view.baseline, spec)
                               for spec in search_space.reward_grid()], tried)
        return rng.choice(pool) if pool else None
    # exploit: scale one active weight of the best config by at most 20%
    active = [s for s in signals if weights[s] != 0.0]
    if not active:
        return None
    s = rng.choice(active)
    w = dict(weights)
    w[s] = w[s] * rng.uniform(0.8, 1.2)
    return _with_reward(view.baseline, _reward_from_weights(w))


def _mutate_efficiency(view, best, category, rng, tried):
    grid = search_space.efficiency_grid(view.baseline)
    pool = _untried(view, grid, tried)
    if category in ("explore", "innovate"):
        if category == "innovate":
            cheaper = [c for c in pool
                       if c.training.epochs <= best.training.epochs]
            if cheaper:
                return rng.choice(cheaper)
        return rng.choice(pool) if pool else None
    # exploit: step training cost down from the best config, preferring the
    # smallest epoch reduction and falling back to cheaper untried points
    t = best.training
    lower = sorted((e for e in search_space.EFFICIENCY_EPOCHS
                    if e < t.epochs), reverse=True)
    batches = list(search_space.EFFICIENCY_BATCHES)
    rng.shuffle(batches)
    for new_epochs in lower or [t.epochs]:
        for batch in batches:
            cfg = Config(best.optimizer, best.architecture, best.reward,
                         type(t)(batch_size=batch, epochs=new_epochs,
                                 seed=t.seed))
            if _signature(cfg) not in tried:
                return cfg
    cheaper = [c for c in pool if c.training.epochs < t.epochs]
    return rng.choice(cheaper or pool) if pool else None


_PROVIDER_KINDS = ("heuristic", "scripted", "http")


def make_provider(cfg: ProviderConfig):
    if cfg.kind == "heuristic":
        return HeuristicProvider(log_path=cfg.log_path)
    if cfg.kind == "scripted":
        if not cfg.replay_path:
            raise ValueError("scripted provider requires replay_path")
        return ScriptedProvider(cfg.replay_path, log_path=cfg.log_path)
    if cfg.kind == "http":
        if not cfg.endpoint:
            raise ValueError("http provider requires endpoint")
        return HttpLLMProvider(cfg.endpoint, cfg.auth_token_env, cfg.timeout,
                               cfg.max_retries, cfg.max_tokens, cfg.log_path)
    raise ValueError(f"unknown provider kind: {cfg.kind!r}; "
                     f"expected one of {_PROVIDER_KINDS}")


def request_proposals(provider, prompt: str, n: int, seed: int) -> str:
    """Single entry point the agents use; returns the raw response text."""
    return provider.complete(prompt, n, seed)
