"""Vapor-pressure surrogate modelling and virtual screening for low-volatility lubricants."""

__version__ = "0.1.0"
