"""Announcement effects on the algebraic connectivity of correlation hypergraphs."""

__version__ = "0.1.0"
