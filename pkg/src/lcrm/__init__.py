"""Front tracking with level-contour reconstruction for two-phase flow with soluble surfactant."""

__version__ = "0.1.0"
