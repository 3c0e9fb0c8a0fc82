"""Exact computations in the reduced spine of deformation spaces of graphs
of groups with finite vertex and edge groups."""

__version__ = "0.1.0"
