"""Restricted observer states in a two-outcome quantum measurement chain.

Submodules
----------
qcore
    States, observables, partial trace, spectral decomposition.
chain
    Spin, pointer and environment construction; premeasurement.
restrict
    Partial-trace and stochastic restrictions, gemenge sampling,
    information patterns, moment ensembles.
nogo
    Null-space feasibility certificates for single-event discrimination.
itobs
    Interference observables and sequential pure/mixed discrimination.
decohere
    Environment-induced suppression of branch coherence.
cli
    Scenario runner.
"""
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
