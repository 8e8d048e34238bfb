"""Numerical laboratory for phase-space scaling maps of a single bosonic mode:
s-ordered quasiprobabilities, classical-noise and quantum-limited channels,
and certification of where in parameter space these maps are non-positive,
completely positive, entanglement breaking, or nonclassicality breaking.
"""

__version__ = "0.1.0"

from . import certify, channels, fock, gaussian, phasediagram, quasiprob

__all__ = [
    "__version__",
    "certify",
    "channels",
    "fock",
    "gaussian",
    "phasediagram",
    "quasiprob",
]
