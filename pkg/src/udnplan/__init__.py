"""Spectral-efficiency bounds, Monte Carlo validation and spectrum/density
planning for ultra-dense μWave networks with a downlink-only mmWave overlay."""

__version__ = "0.1.0"
