"""Generalized Kloosterman sums for specified local representation families.

Subpackages by concern: padic (mod p^k toolbox), quadext (quadratic
extensions of Q_p), extchars (characters of E^x), families (the five local
test-function families), engine (the generalized sums, transforms and
bounds), archimedean (Bessel transforms), petersson (numerical trace
formula harness), cli (batch front end).
"""

from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
