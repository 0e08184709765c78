"""Constraint-based reachability over a finite-domain integer solver."""

__version__ = "0.1.0"
