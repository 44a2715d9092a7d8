"""Exact second-moment convergence of random quantum circuits.

Computes t = 2 multiplicative errors against the Haar measure,
epsilon-approximate 2-design depths, anticoncentration comparisons,
connection counts, and the associated closed-form bounds, validated by a
dense Weingarten/Choi oracle at small size.
"""

from . import (analytics, architectures, connectivity, engine, kernels,
               oracle, perm_algebra)

__all__ = ["analytics", "architectures", "connectivity", "engine",
           "kernels", "oracle", "perm_algebra"]

__version__ = "0.1.0"
