"""evoloop: dual-loop self-evolving model optimization at desk scale."""

__version__ = "0.1.0"
