"""Worst-case square-loss analysis of forecast aggregation schemes."""

__version__ = "0.1.0"
