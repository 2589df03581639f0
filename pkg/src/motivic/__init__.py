"""Symbolic engine for constructible motivic exponential functions."""

__version__ = "0.1.0"
