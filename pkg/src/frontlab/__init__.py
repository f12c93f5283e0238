"""Supercritical traveling fronts of reaction-diffusion equations in strips."""

__version__ = "0.1.0"
