"""Spectral statistics of non-Hermitian random matrices with a trace-squared
potential: special functions, eigenvalue solvers, samplers, determinantal
kernels and estimators."""
from .io import code_version

__version__ = code_version()
