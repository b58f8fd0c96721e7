"""Causal discovery from interventional data under selection bias."""
__version__ = "0.1.0"
