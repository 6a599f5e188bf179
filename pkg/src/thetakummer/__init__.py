"""Theta functions, theta relations and Kummer quartics."""

__version__ = "0.1.0"
