"""Subspace power iteration clustering.

Sparse graph aggregators applied as repeated linear (or lightly nonlinear)
maps, a dense spectral oracle to explain what the iteration converges to,
small trainable heads on the propagated features, and a benchmark harness
with synthetic stochastic block model graphs.
"""

__version__ = "0.1.0"

__all__ = [
    "aggregators",
    "bench",
    "graphdata",
    "learn",
    "plots",
    "propagation",
    "reporting",
]
