"""Reduced-reference parametric audiovisual quality estimation."""

__version__ = "0.1.0"
