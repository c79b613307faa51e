"""Text normalization for speech: contextual scorers constrained by finite-state covering grammars."""

__version__ = "0.1.0"
