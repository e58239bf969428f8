"""Single-pass evolving hyperplane-based neuro-fuzzy regression."""

__version__ = "0.1.0"
