"""ARMA spectral-density laboratory.

Exact Gaussian likelihoods over Toeplitz covariances, spectral information
geometry, asymptotic Bayes spectral estimates and Monte Carlo KL risk, with
Jeffreys and superharmonic priors.
"""

try:
    from ._core import *  # noqa: F401,F403  (wheel layout)
except ImportError:  # pragma: no cover - CMake build-tree layout
    from _core import *  # noqa: F401,F403

__version__ = "0.1.0"
