"""Divided power structures on ideals of concrete commutative rings, checked exhaustively."""

__version__ = "0.1.0"
