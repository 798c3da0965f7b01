"""Stochastic decompositions for two-company risk models and two-queue fluid networks.

Analytic transforms through Wiener-Hopf factors, Laplace inversion,
event-driven simulators and a statistical verification harness.
"""

__version__ = "0.1.0"
