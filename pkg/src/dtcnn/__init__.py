"""Dynamic texture classification with texture CNNs on three orthogonal planes."""

__version__ = "0.1.0"
