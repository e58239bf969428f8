"""Hyperplane-based fuzzy rule base: inference, rule dynamics, consequent learning."""
