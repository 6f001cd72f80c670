"""One-dimensional Zig-Zag sampler: simulation, estimators and variance theory."""

__version__ = "0.1.0"
