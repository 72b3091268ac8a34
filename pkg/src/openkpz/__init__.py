"""Numerical laboratory for the open ASEP stationary measure and its open KPZ limit."""

__version__ = "0.1.0"
