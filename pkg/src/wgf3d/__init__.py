"""Windowed Green function boundary integral solver for 3D dielectric waveguides."""

__version__ = "0.1.0"
