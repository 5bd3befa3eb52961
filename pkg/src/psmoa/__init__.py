"""Policy-aware multi-objective replica placement (PSMOA) with NSGA-II/III baselines."""

__version__ = "0.1.0"
