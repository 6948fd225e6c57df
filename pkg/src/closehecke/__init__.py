"""Exact congruence-level Hecke algebras of GL_n over close local fields."""

__version__ = "0.1.0"
