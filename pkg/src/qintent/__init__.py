"""Weakly-supervised search-query intent classification pipeline."""

__version__ = "0.1.0"
