"""Scenario runners driving simlab from the JSON experiment config."""
