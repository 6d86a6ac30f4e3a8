"""Numerical laboratory for empirical covariance matrices of log-concave ensembles."""
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
