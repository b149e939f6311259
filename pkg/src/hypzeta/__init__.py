"""Zeta functions of smooth projective hypersurfaces over F_p by controlled reduction."""

__version__ = "0.1.0"
