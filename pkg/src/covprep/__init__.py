"""Preprocessing pipelines and regression benchmarks for daily epidemiological series."""

__version__ = "0.1.0"
