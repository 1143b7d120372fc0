"""Simulator for single-atom cavity-QED network nodes and the photonic protocols linking them."""

__version__ = "0.1.0"
