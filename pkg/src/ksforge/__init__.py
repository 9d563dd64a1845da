"""Kochen-Specker sets, product-ray colourings and Bell scenarios for multiqubit systems."""

__version__ = "0.1.0"
