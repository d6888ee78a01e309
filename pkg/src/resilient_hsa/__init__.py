# src/resilient_hsa/__init__.py
"""Resilient hierarchical secure aggregation over a prime field, simulated and audited at desk scale."""

__version__ = "0.1.0"
