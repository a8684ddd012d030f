"""Evaluation metrics, Pareto-frontier analysis and seed statistics."""
