"""Nonparametric Bayes toolkit: Dirichlet-process constructions, random-mean
distributions, quantile inference and quantile pyramids, frailty survival
processes, local Bayesian regression, and nonparametric envelopes around
parametric models.

Everything stochastic is driven by an explicit :class:`npbayes.randkit.RngState`,
so identical seeds reproduce identical output.
"""

from npbayes.randkit import RngState

__all__ = ["RngState"]
__version__ = "0.1.0"
