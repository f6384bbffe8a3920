from .persona import DEFAULT_QUOTA, PERSONA_KINDS, PersonaSpec, default_persona
from .prompt import BASELINE_HEADER, HISTORY_HEADER, build_prompt
from .proposals import (
    CATEGORIES,
    LintResult,
    PATH_ALIASES,
    Proposal,
    lint_proposal,
    parse_proposals,
)
from .providers import (
    HeuristicProvider,
    HttpLLMProvider,
    ProviderConfig,
    ProviderError,
    ScriptedProvider,
    make_provider,
    request_proposals,
)

__all__ = [
    "DEFAULT_QUOTA",
    "PERSONA_KINDS",
    "PersonaSpec",
    "default_persona",
    "BASELINE_HEADER",
    "HISTORY_HEADER",
    "build_prompt",
    "CATEGORIES",
    "LintResult",
    "PATH_ALIASES",
    "Proposal",
    "lint_proposal",
    "parse_proposals",
    "HeuristicProvider",
    "HttpLLMProvider",
    "ProviderConfig",
    "ProviderError",
    "ScriptedProvider",
    "make_provider",
    "request_proposals",
]
