"""QADA receiver simulation and perspective-n-point pose estimation."""

__version__ = "0.1.0"
