"""Multiscale geometric square functions on planar curves and a Lipschitz-graph construction."""

__version__ = "0.1.0"
