"""Explainable human-in-the-loop literature screening pipeline."""

__version__ = "0.1.0"
