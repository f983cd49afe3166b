"""Reflexive points of paired extremal-length data on restricted character slices."""

__version__ = "0.1.0"
