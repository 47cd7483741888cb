"""Decoherence of a central system computed as Loschmidt-echo fidelity decay of its environment."""

from .linalg import CompositeSpace, SpectralPropagator, kron, overlap, partial_trace_env, propagator

__version__ = "0.1.0"

__all__ = [
    "CompositeSpace",
    "SpectralPropagator",
    "kron",
    "overlap",
    "partial_trace_env",
    "propagator",
]
