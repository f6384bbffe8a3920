"""Deterministic prompt assembly for proposal requests.

Section order is fixed: PERSONA, TASK, SPECIAL INSTRUCTIONS (omitted when
empty), GUARDRAILS, CONTEXT, OUTPUT FORMAT, EXAMPLE PROPOSAL. The context
section embeds the baseline configuration in canonical text plus the
rendered experiment history; it never contains hidden-column data or
provider credentials.
"""

from __future__ import annotations

from evoloop.configspace import Config, serialize_config
from .persona import PersonaSpec

BASELINE_HEADER = "The model currently has the following configuration:"
HISTORY_HEADER = "Below is the history of past experiment results:"


def build_prompt(persona: PersonaSpec, baseline: Config,
                 journal_context: str) -> str:
    parts: list[str] = []

    parts.append("# PERSONA")
    if persona.framing:
        parts.append(
            "You are a brilliant and innovative machine learning scientist "
            "with excellent programming and analytical skills. You want to "
            "improve the model and you have deep expertise in "
            f"{persona.specialization}.")
    else:
        parts.append("You are assisting with model configuration changes.")
    parts.append("")

    x, y, z = persona.quota
    parts.append("# TASK")
    parts.append(f"Propose changes in {persona.task} to the model, with the "
                 "following goals:")
    parts.append("- Balance exploration, exploitation, and innovation: make "
                 f"{x}, {y}, and {z} proposals, respectively, in the three "
                 "categories.")
    parts.append("- Aim to maximize the following online metrics, in order "
                 "of importance: " + ", ".join(persona.objective_metrics))
    if persona.optimize_cost:
        parts.append("- Reduce training cost where convergence allows it.")
    parts.append("")

    if persona.steering:
        parts.append("# SPECIAL INSTRUCTIONS")
        parts.append(persona.steering)
        parts.append("")

    parts.append("# GUARDRAILS")
    parts.append("Maintain system safety by enforcing:")
    for metric, bound in persona.guardrails:
        parts.append(f"- Keep {metric} {bound}")
    parts.append("")

    parts.append("# CONTEXT")
    parts.append(BASELINE_HEADER)
    parts.append(serialize_config(baseline).rstrip())
    if persona.schema_excerpt:
        parts.append("The schema definition is the following:")
        parts.append(persona.schema_excerpt)
    parts.append(HISTORY_HEADER)
    parts.append(journal_context.rstrip() if journal_context.strip()
                 else "no prior experiments")
    parts.append("")

    parts.append("# OUTPUT FORMAT")
    parts.append("Think step-by-step and double-check syntax. Output a JSON "
                 "array where each proposal has exactly two fields:")
    parts.append('- "explanation", briefly describing what change this is '
                 "and why it is potentially useful (start it with the "
                 "category tag [explore], [exploit], or [innovate])")
    parts.append('- "diff", the change against the model\'s current '
                 "configuration, as an array of {op, path, value} objects")
    parts.append("")

    parts.append("# EXAMPLE PROPOSAL")
    parts.append(persona.example_proposal)

    return "\n".join(parts)
